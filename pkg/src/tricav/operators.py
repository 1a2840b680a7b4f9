"""Immutable sparse complex operators and the small algebra the models are built from.

Everything downstream (Hamiltonians, jump operators, effective reductions)
is expressed through :class:`SparseOperator`, a thin canonicalizing wrapper
around a compressed-sparse-row matrix.  Operators are immutable after
construction so they can be shared freely between concurrently running
trajectories.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np
from scipy import sparse

__all__ = [
    "ZERO_TOL",
    "SparseOperator",
    "add",
    "scale",
    "mul",
    "adjoint",
    "commutator",
    "expectation",
]

# Entries with magnitude below this are treated as structural zeros.
ZERO_TOL = 1e-14


class SparseOperator:
    """A complex sparse matrix of fixed square dimension.

    Canonical storage: sorted CSR, duplicate entries summed, magnitudes
    below :data:`ZERO_TOL` dropped.  Instances are immutable; all arithmetic
    returns new operators.
    """

    __slots__ = ("_mat",)

    def __init__(self, matrix) -> None:
        m = sparse.csr_array(matrix, dtype=np.complex128)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        m.sum_duplicates()
        if m.nnz:
            m.data[np.abs(m.data) < ZERO_TOL] = 0.0
        m.eliminate_zeros()
        m.sort_indices()
        for arr in (m.data, m.indices, m.indptr):
            arr.flags.writeable = False
        self._mat = m

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_entries(
        cls,
        dim: int,
        rows: Sequence[int],
        cols: Sequence[int],
        values: Sequence[complex],
    ) -> "SparseOperator":
        coo = sparse.coo_array(
            (np.asarray(values, dtype=np.complex128), (rows, cols)), shape=(dim, dim)
        )
        return cls(coo)

    @classmethod
    def zero(cls, dim: int) -> "SparseOperator":
        return cls(sparse.csr_array((dim, dim), dtype=np.complex128))

    @classmethod
    def identity(cls, dim: int) -> "SparseOperator":
        return cls(sparse.identity(dim, dtype=np.complex128, format="csr"))

    # -- inspection --------------------------------------------------------

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    @property
    def nnz(self) -> int:
        return self._mat.nnz

    def toarray(self) -> np.ndarray:
        return self._mat.toarray()

    def tocsr(self) -> sparse.csr_array:
        return self._mat.copy()

    def entries(self) -> Iterator[tuple[int, int, complex]]:
        """Yield (row, col, value) in deterministic row-major order."""
        coo = self._mat.tocoo()
        for r, c, v in zip(coo.row, coo.col, coo.data):
            yield int(r), int(c), complex(v)

    def max_abs(self) -> float:
        """Largest entry magnitude (0 for the zero operator)."""
        return float(np.abs(self._mat.data).max()) if self._mat.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self._mat - self._mat.conj().T
        return float(np.abs(d.data).max()) <= tol if d.nnz else True

    def __repr__(self) -> str:
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz})"

    # -- algebra -----------------------------------------------------------

    def _check_dim(self, other: "SparseOperator") -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_dim(other)
        return SparseOperator(self._mat + other._mat)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_dim(other)
        return SparseOperator(self._mat - other._mat)

    def __neg__(self) -> "SparseOperator":
        return SparseOperator(-self._mat)

    def __mul__(self, z: complex) -> "SparseOperator":
        return SparseOperator(self._mat * complex(z))

    __rmul__ = __mul__

    def __truediv__(self, z: complex) -> "SparseOperator":
        return SparseOperator(self._mat / complex(z))

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_dim(other)
        return SparseOperator(self._mat @ other._mat)

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self._mat.conj().T)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Matrix-vector product on a dense state vector."""
        vec = np.asarray(vec, dtype=np.complex128)
        if vec.shape != (self.dim,):
            raise ValueError(f"vector shape {vec.shape} does not match dim {self.dim}")
        return self._mat @ vec


# -- free-function spelling of the algebra ---------------------------------


def add(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a + b


def scale(z: complex, a: SparseOperator) -> SparseOperator:
    return z * a


def mul(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a @ b


def adjoint(a: SparseOperator) -> SparseOperator:
    return a.adjoint()


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a @ b - b @ a


def expectation(a: SparseOperator, rho: np.ndarray) -> complex:
    """tr(A ρ) for a dense density matrix ρ."""
    rho = np.asarray(rho)
    if rho.shape != (a.dim, a.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dim {a.dim}")
    return complex(a._mat.multiply(rho.T).sum())
