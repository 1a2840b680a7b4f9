"""Truncated composite Hilbert space: two seven-level atoms and four cavity modes.

Each atom carries four ground levels (gL, g0, gR, ga) and three excited
levels (eL, e0, eR); the cavities contribute four bosonic modes (two per
cavity).  The simulation basis is the product basis filtered by total
excitation number — excited-atom count plus total photon number — which is
conserved by the static Hamiltonian and changed by exactly one by the weak
optical drive, so low truncations capture the protocol dynamics.

Both atoms carry all seven levels even though atom 1 never couples through
eL/eR and atom 2 never uses ga; the uniform layout keeps indexing trivial
and the unused levels stay dynamically dark.
"""

from __future__ import annotations

import itertools
from enum import IntEnum
from typing import Iterator, NamedTuple

import numpy as np

from .operators import SparseOperator

__all__ = [
    "AtomLevel",
    "ModeId",
    "GROUND_LEVELS",
    "EXCITED_LEVELS",
    "BasisState",
    "StateSpace",
    "build_state_space",
    "atom_pair_from_label",
    "lift_atom_op",
    "lift_mode_annihilator",
    "excitation_number_op",
]


class AtomLevel(IntEnum):
    """Internal atomic level; the ordinal fixes the basis ordering."""

    gL = 0
    g0 = 1
    gR = 2
    ga = 3
    eL = 4
    e0 = 5
    eR = 6

    @property
    def is_excited(self) -> bool:
        return self >= AtomLevel.eL


GROUND_LEVELS = (AtomLevel.gL, AtomLevel.g0, AtomLevel.gR, AtomLevel.ga)
EXCITED_LEVELS = (AtomLevel.eL, AtomLevel.e0, AtomLevel.eR)


class ModeId(IntEnum):
    """Local cavity mode; two modes per cavity, ordinal fixes the photon-tuple slot."""

    aL1 = 0
    aL2 = 1
    aR1 = 2
    aR2 = 3


class BasisState(NamedTuple):
    atom1: AtomLevel
    atom2: AtomLevel
    photons: tuple[int, int, int, int]

    def excitation(self) -> int:
        return (
            int(self.atom1.is_excited)
            + int(self.atom2.is_excited)
            + sum(self.photons)
        )

    def label(self) -> str:
        base = f"{self.atom1.name}{self.atom2.name}"
        if any(self.photons):
            base += ":" + "".join(str(n) for n in self.photons)
        return base


def atom_pair_from_label(label: str) -> tuple[AtomLevel, AtomLevel]:
    """Parse a two-atom label like ``"gagL"`` into its (atom1, atom2) levels."""
    if len(label) != 4:
        raise ValueError(f"expected a 4-character two-atom label, got {label!r}")
    try:
        return AtomLevel[label[:2]], AtomLevel[label[2:]]
    except KeyError as exc:
        raise ValueError(f"unknown atom level in label {label!r}") from exc


class StateSpace:
    """Deterministic enumeration of the truncated product basis.

    States are ordered lexicographically in (atom1 ordinal, atom2 ordinal,
    photon tuple); every product state with total excitation at most
    ``max_excitation`` and per-mode occupation at most ``per_mode_cap``
    appears exactly once.
    """

    def __init__(self, max_excitation: int = 1, per_mode_cap: int = 1) -> None:
        if max_excitation < 1:
            raise ValueError(
                "max_excitation must be >= 1: a ground-only space cannot host "
                "the drive dynamics"
            )
        if per_mode_cap < 1:
            raise ValueError("per_mode_cap must be >= 1")
        self.max_excitation = int(max_excitation)
        self.per_mode_cap = int(per_mode_cap)

        states: list[BasisState] = []
        occupations = range(self.per_mode_cap + 1)
        for a1, a2 in itertools.product(AtomLevel, AtomLevel):
            base = int(a1.is_excited) + int(a2.is_excited)
            if base > self.max_excitation:
                continue
            for photons in itertools.product(occupations, repeat=len(ModeId)):
                if base + sum(photons) <= self.max_excitation:
                    states.append(BasisState(a1, a2, photons))
        self.states: tuple[BasisState, ...] = tuple(states)
        self._index: dict[BasisState, int] = {s: i for i, s in enumerate(states)}
        self.excitations: np.ndarray = np.array(
            [s.excitation() for s in states], dtype=np.int64
        )
        self.excitations.flags.writeable = False

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[BasisState]:
        return iter(self.states)

    def __contains__(self, state: BasisState) -> bool:
        return state in self._index

    def index_of(self, state: BasisState) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise ValueError(f"state {state} is not in this space") from None

    def indices_with_excitation(self, k: int) -> np.ndarray:
        return np.nonzero(self.excitations == k)[0]

    @property
    def ground_indices(self) -> np.ndarray:
        return self.indices_with_excitation(0)

    @property
    def ground_states(self) -> tuple[BasisState, ...]:
        return tuple(self.states[i] for i in self.ground_indices)

    def ket(
        self,
        atom1: AtomLevel,
        atom2: AtomLevel,
        photons: tuple[int, int, int, int] = (0, 0, 0, 0),
    ) -> np.ndarray:
        """Dense basis vector for the given product state."""
        vec = np.zeros(self.dim, dtype=np.complex128)
        vec[self.index_of(BasisState(atom1, atom2, tuple(photons)))] = 1.0
        return vec

    def __repr__(self) -> str:
        return (
            f"StateSpace(max_excitation={self.max_excitation}, "
            f"per_mode_cap={self.per_mode_cap}, dim={self.dim})"
        )


def build_state_space(max_excitation: int = 1, per_mode_cap: int = 1) -> StateSpace:
    """Enumerate the truncated basis; see :class:`StateSpace` for the ordering."""
    return StateSpace(max_excitation, per_mode_cap)


def lift_atom_op(
    space: StateSpace, atom: int, bra: AtomLevel, ket: AtomLevel
) -> SparseOperator:
    """|bra⟩⟨ket| on the named atom, identity elsewhere, projected onto the basis.

    Matrix elements whose source or target state falls outside the truncated
    space are dropped — that is the truncation.
    """
    if atom not in (1, 2):
        raise ValueError(f"atom must be 1 or 2, got {atom}")
    field = "atom1" if atom == 1 else "atom2"
    rows, cols = [], []
    for i, s in enumerate(space.states):
        if getattr(s, field) != ket:
            continue
        target = s._replace(**{field: bra})
        if target in space:
            rows.append(space.index_of(target))
            cols.append(i)
    return SparseOperator.from_entries(space.dim, rows, cols, np.ones(len(rows)))


def lift_mode_annihilator(space: StateSpace, mode: ModeId) -> SparseOperator:
    """Bosonic annihilator of one local mode with the usual √n matrix elements."""
    mode = ModeId(mode)
    rows, cols, vals = [], [], []
    for i, s in enumerate(space.states):
        n = s.photons[mode]
        if n == 0:
            continue
        photons = list(s.photons)
        photons[mode] = n - 1
        target = s._replace(photons=tuple(photons))
        # Annihilation lowers the excitation count, so the target always exists.
        rows.append(space.index_of(target))
        cols.append(i)
        vals.append(np.sqrt(n))
    return SparseOperator.from_entries(space.dim, rows, cols, vals)


def excitation_number_op(space: StateSpace) -> SparseOperator:
    """Diagonal operator counting excited atoms plus photons."""
    idx = np.arange(space.dim)
    return SparseOperator.from_entries(
        space.dim, idx, idx, space.excitations.astype(np.complex128)
    )
