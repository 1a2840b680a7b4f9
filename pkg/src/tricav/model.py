"""Hamiltonians, collapse channels, and target states of the two-atom scheme.

The setup: two atoms sit in separate bimode cavities whose corresponding
modes are coupled by photon hopping of strength J.  Atom 1 is driven on the
ga → e0 transition and decays from e0 into gL, ga, gR with equal branching;
atom 2 is driven on gL → eL and gR → eR and decays from each excited level
into two ground levels.  A microwave field stirs the ground manifolds with
opposite signs on the two atoms.  All parameters are dimensionless ratios in
units of the atom–cavity coupling g, with time measured in 1/g.

Symmetric choices are hard-wired: equal couplings on both transitions, equal
drive amplitudes, opposite microwave signs (ω₁ = −ω₂ = ω), equal hopping on
the two mode pairs, and equal decay rates for both cavities/atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .operators import SparseOperator
from .space import (
    AtomLevel,
    ModeId,
    StateSpace,
    atom_pair_from_label,
    lift_atom_op,
    lift_mode_annihilator,
)

__all__ = [
    "ModelParams",
    "CollapseChannel",
    "TargetStates",
    "delta_star",
    "build_H0",
    "build_Hg",
    "build_drive",
    "build_H_full",
    "delocalized_modes",
    "build_collapse_channels",
    "target_states",
    "ground_state_vector",
]


def delta_star(g: float, J: float, Delta: float) -> float:
    """Cavity detuning that tunes the two-photon resonance used by the scheme.

    Returns (g² + √(g⁴ + 4J²Δ²)) / (2Δ) — the positive root of
    g²δ + Δ(J² − δ²) = 0, at which the delocalized-mode response is purely
    dissipation-limited.
    """
    if Delta == 0:
        raise ValueError("delta_star is undefined for Delta = 0")
    return (g**2 + math.sqrt(g**4 + 4.0 * J**2 * Delta**2)) / (2.0 * Delta)


@dataclass(frozen=True)
class ModelParams:
    """All physical symbols of the model, in units of g.

    ``delta=None`` resolves to :func:`delta_star` of (g, J, Delta), the
    detuning every protocol analysis assumes; pass an explicit value to
    detune deliberately.
    """

    g: float = 1.0
    Omega: float = 0.0
    omega: float = 0.0
    Delta: float = 1.0
    J: float = 6.0
    delta: float | None = None
    kappa: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.g <= 0:
            raise ValueError("coupling g must be positive")
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("decay rates kappa and gamma must be non-negative")
        if self.delta is None:
            object.__setattr__(
                self, "delta", delta_star(self.g, self.J, self.Delta)
            )

    def as_dict(self) -> dict[str, float]:
        return {
            "g": self.g,
            "Omega": self.Omega,
            "omega": self.omega,
            "Delta": self.Delta,
            "J": self.J,
            "delta": self.delta,
            "kappa": self.kappa,
            "gamma": self.gamma,
        }


@dataclass(frozen=True)
class CollapseChannel:
    """A labeled jump operator; the operator already carries its √rate factor."""

    label: str
    op: SparseOperator


def _atom1(space: StateSpace, bra: AtomLevel, ket: AtomLevel) -> SparseOperator:
    return lift_atom_op(space, 1, bra, ket)


def _atom2(space: StateSpace, bra: AtomLevel, ket: AtomLevel) -> SparseOperator:
    return lift_atom_op(space, 2, bra, ket)


def build_H0(params: ModelParams, space: StateSpace) -> SparseOperator:
    """Static Hamiltonian: mode detunings, atom–cavity couplings, photon hopping.

    The four coupling terms put atom 1's e0 ↔ gL/gR transitions on cavity-L/R
    mode 1 and atom 2's eR ↔ g0 / eL ↔ g0 transitions on cavity-L/R mode 2.
    """
    L = AtomLevel
    a = {m: lift_mode_annihilator(space, m) for m in ModeId}

    n_total = SparseOperator.zero(space.dim)
    for m in ModeId:
        n_total = n_total + a[m].adjoint() @ a[m]

    # Excitation-conserving products: apply the lowering factor first so the
    # intermediate state never leaves the truncated space.
    coup = (
        a[ModeId.aL1].adjoint() @ _atom1(space, L.gL, L.e0)
        + a[ModeId.aL2].adjoint() @ _atom2(space, L.g0, L.eR)
        + a[ModeId.aR1].adjoint() @ _atom1(space, L.gR, L.e0)
        + a[ModeId.aR2].adjoint() @ _atom2(space, L.g0, L.eL)
    )
    hop = a[ModeId.aL1].adjoint() @ a[ModeId.aL2] + a[ModeId.aR1].adjoint() @ a[ModeId.aR2]
    excited = (
        _atom1(space, L.e0, L.e0)
        + _atom2(space, L.eL, L.eL)
        + _atom2(space, L.eR, L.eR)
    )

    h = (
        params.delta * n_total
        + params.g * (coup + coup.adjoint())
        + params.Delta * excited
        + params.J * (hop + hop.adjoint())
    )
    return h


def build_Hg(params: ModelParams, space: StateSpace) -> SparseOperator:
    """Microwave stirring of the ground manifolds, with opposite signs per atom."""
    L = AtomLevel
    h1 = _atom1(space, L.gL, L.ga) + _atom1(space, L.gR, L.ga)
    h2 = _atom2(space, L.gL, L.g0) + _atom2(space, L.gR, L.g0)
    return params.omega * (h1 + h1.adjoint()) - params.omega * (h2 + h2.adjoint())


def build_drive(
    params: ModelParams, space: StateSpace
) -> tuple[SparseOperator, SparseOperator]:
    """Weak optical pumping (V₊, V₋); V₊ raises the excitation number by one."""
    L = AtomLevel
    vplus = params.Omega * (
        _atom1(space, L.e0, L.ga)
        + _atom2(space, L.eL, L.gL)
        + _atom2(space, L.eR, L.gR)
    )
    return vplus, vplus.adjoint()


def build_H_full(params: ModelParams, space: StateSpace) -> SparseOperator:
    vplus, vminus = build_drive(params, space)
    return build_H0(params, space) + build_Hg(params, space) + vplus + vminus


def delocalized_modes(space: StateSpace) -> dict[str, SparseOperator]:
    """The ± mode combinations that diagonalize the hopping term.

    cX1 = (aX1 − aX2)/√2 and cX2 = (aX1 + aX2)/√2 for X ∈ {L, R}; in this
    basis the mode Hamiltonian reads (δ−J)c†X1cX1 + (δ+J)c†X2cX2.
    """
    a = {m: lift_mode_annihilator(space, m) for m in ModeId}
    s = 1.0 / math.sqrt(2.0)
    return {
        "cL1": s * (a[ModeId.aL1] - a[ModeId.aL2]),
        "cL2": s * (a[ModeId.aL1] + a[ModeId.aL2]),
        "cR1": s * (a[ModeId.aR1] - a[ModeId.aR2]),
        "cR2": s * (a[ModeId.aR1] + a[ModeId.aR2]),
    }


# Every label build_collapse_channels can emit, in its canonical order.
# Useful for validating channel references before a model is built.
CHANNEL_LABELS = (
    "kappa.cL1",
    "kappa.cL2",
    "kappa.cR1",
    "kappa.cR2",
    "gamma1.gL_from_e0",
    "gamma1.ga_from_e0",
    "gamma1.gR_from_e0",
    "gamma2.gL_from_eL",
    "gamma2.g0_from_eL",
    "gamma2.gR_from_eR",
    "gamma2.g0_from_eR",
)


def build_collapse_channels(
    params: ModelParams, space: StateSpace
) -> list[CollapseChannel]:
    """The dissipation channels: cavity decay and spontaneous emission.

    Cavity decay acts on the four delocalized modes at rate κ each.  Atom 1
    decays from e0 into gL, ga, gR with branching γ/3; atom 2 decays from eL
    into gL, g0 and from eR into gR, g0 with branching γ/2.  Channels whose
    rate is zero are omitted so the integrator's channel loop stays tight.
    """
    L = AtomLevel
    channels: list[CollapseChannel] = []
    if params.kappa > 0:
        root_kappa = math.sqrt(params.kappa)
        for name, c in delocalized_modes(space).items():
            channels.append(CollapseChannel(f"kappa.{name}", root_kappa * c))
    if params.gamma > 0:
        q1 = math.sqrt(params.gamma / 3.0)
        for tgt in (L.gL, L.ga, L.gR):
            channels.append(
                CollapseChannel(
                    f"gamma1.{tgt.name}_from_e0", q1 * _atom1(space, tgt, L.e0)
                )
            )
        q2 = math.sqrt(params.gamma / 2.0)
        for tgt, src in ((L.gL, L.eL), (L.g0, L.eL), (L.gR, L.eR), (L.g0, L.eR)):
            channels.append(
                CollapseChannel(
                    f"gamma2.{tgt.name}_from_{src.name}",
                    q2 * _atom2(space, tgt, src),
                )
            )
    return channels


@dataclass(frozen=True)
class TargetStates:
    """The entangled target T1 and its orthogonal partners in the triplet span."""

    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray

    def as_dict(self) -> Mapping[str, np.ndarray]:
        return {"T1": self.T1, "T2": self.T2, "T3": self.T3}


def target_states(space: StateSpace) -> TargetStates:
    """Embed the target triplet at vacuum photons.

    T1 = (|gLgR⟩ + |gRgL⟩ + |gag0⟩)/√3 is the three-dimensional entangled
    target; T2 and T3 complete an orthonormal basis of the same span.
    """
    L = AtomLevel
    k_lr = space.ket(L.gL, L.gR)
    k_rl = space.ket(L.gR, L.gL)
    k_a0 = space.ket(L.ga, L.g0)
    return TargetStates(
        T1=(k_lr + k_rl + k_a0) / math.sqrt(3.0),
        T2=(k_lr + k_rl - 2.0 * k_a0) / math.sqrt(6.0),
        T3=(k_lr - k_rl) / math.sqrt(2.0),
    )


def ground_state_vector(space: StateSpace, label: str) -> np.ndarray:
    """Basis vector for a two-atom ground state label like ``"gagL"`` (vacuum photons)."""
    a1, a2 = atom_pair_from_label(label)
    if a1.is_excited or a2.is_excited:
        raise ValueError(f"{label!r} is not a ground-manifold state")
    return space.ket(a1, a2)
