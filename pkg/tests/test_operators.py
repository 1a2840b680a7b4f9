"""Sparse-operator wrapper: canonicalization, immutability, algebra vs dense."""

import numpy as np
import pytest
from scipy import sparse

from tricav.operators import (
    SparseOperator,
    ZERO_TOL,
    adjoint,
    commutator,
    expectation,
)


def random_sparse(rng, dim=9, density=0.3):
    mask = rng.random((dim, dim)) < density
    m = np.where(mask, rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)), 0)
    return m


def test_rejects_non_square():
    with pytest.raises(ValueError, match="square"):
        SparseOperator(np.ones((2, 3)))


def test_duplicates_summed_and_zeros_dropped():
    op = SparseOperator.from_entries(3, [0, 0, 1], [1, 1, 2], [1.0, 2.0, 1e-16])
    assert op.nnz == 1
    assert op.toarray()[0, 1] == 3.0


def test_tiny_entries_are_structural_zeros():
    op = SparseOperator(np.array([[0.5 * ZERO_TOL, 1.0], [0.0, 0.0]]))
    assert op.nnz == 1
    assert op.max_abs() == 1.0
    assert SparseOperator.zero(4).max_abs() == 0.0


def test_storage_is_immutable():
    op = SparseOperator.identity(3)
    csr = op._mat
    with pytest.raises(ValueError):
        csr.data[0] = 5.0
    # tocsr hands out a private copy
    clone = op.tocsr()
    clone.data[0] = 5.0
    assert op.toarray()[0, 0] == 1.0


def test_algebra_matches_dense(rng):
    a_d, b_d = random_sparse(rng), random_sparse(rng)
    a, b = SparseOperator(a_d), SparseOperator(b_d)
    cases = {
        "add": (a + b, a_d + b_d),
        "sub": (a - b, a_d - b_d),
        "neg": (-a, -a_d),
        "scale": (2.5j * a, 2.5j * a_d),
        "div": (a / 2.0, a_d / 2.0),
        "matmul": (a @ b, a_d @ b_d),
        "adjoint": (adjoint(a), a_d.conj().T),
        "comm": (commutator(a, b), a_d @ b_d - b_d @ a_d),
    }
    for name, (got, want) in cases.items():
        np.testing.assert_allclose(got.toarray(), want, atol=1e-13, err_msg=name)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        SparseOperator.identity(2) + SparseOperator.identity(3)
    with pytest.raises(ValueError, match="dimension mismatch"):
        SparseOperator.identity(2) @ SparseOperator.identity(3)


def test_entries_row_major(rng):
    m = random_sparse(rng, dim=6)
    op = SparseOperator(m)
    seen = list(op.entries())
    assert seen == sorted(seen, key=lambda e: (e[0], e[1]))
    rebuilt = np.zeros_like(m)
    for r, c, v in seen:
        rebuilt[r, c] = v
    np.testing.assert_allclose(rebuilt, np.where(np.abs(m) < ZERO_TOL, 0, m))


def test_is_hermitian():
    h = np.array([[1.0, 1j], [-1j, 2.0]])
    assert SparseOperator(h).is_hermitian()
    assert not SparseOperator(h + np.array([[0, 1e-9], [0, 0]])).is_hermitian()
    assert SparseOperator.zero(5).is_hermitian()


def test_apply_and_expectation(rng):
    m = random_sparse(rng, dim=5)
    op = SparseOperator(m)
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    np.testing.assert_allclose(op.apply(v), m @ v, atol=1e-13)
    with pytest.raises(ValueError, match="vector shape"):
        op.apply(np.ones(4))

    rho = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    rho = rho + rho.conj().T
    assert expectation(op, rho) == pytest.approx(np.trace(m @ rho))
    with pytest.raises(ValueError, match="density matrix shape"):
        expectation(op, np.eye(4))


def test_constructors():
    eye = SparseOperator.identity(4)
    np.testing.assert_array_equal(eye.toarray(), np.eye(4))
    z = SparseOperator.zero(4)
    assert z.nnz == 0 and z.dim == 4
    from_csr = SparseOperator(sparse.random(8, 8, density=0.2, random_state=7, dtype=np.float64))
    assert from_csr.dim == 8
