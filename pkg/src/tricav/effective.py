"""Ground-manifold reduction of the driven dissipative model.

Weak driving lets the decaying excited manifold be eliminated at second
order: with H_NH = H0 − (i/2)Σⱼ Lʲ†Lʲ, the reduced dynamics on the 16 two-atom
ground states is generated by

    H_eff = −½ V₋ [H_NH⁻¹ + (H_NH⁻¹)†] V₊ + Hg,
    L_eff^j = Lʲ H_NH⁻¹ V₊.

:func:`reduce_effective` performs this inversion numerically on the
single-excitation block.  :func:`closed_form_gamma` and
:func:`closed_form_kappa` build the same operators from hand-derived scalar
coefficient tables valid when only one kind of dissipation is present; the
numeric reduction is the ground truth, and the closed forms serve as an
independent cross-check of both.

Derivation sketch for the closed forms: with one excitation, H_NH decomposes
into small sectors — a 3-dim chain (one atom excited, partner spectating),
a 5-dim chain through atom 1's e0 (which radiates into both cavities), and
a 7-dim block over the triplet span.  Each inverse is a ratio of the sector
determinants

    D1 = g²p + A·(J² − p²)         (3-dim chain)
    D2 = 2g²p + A·(J² − p²)        (5-dim, e0 chain)
    D3 = 2g⁴ − 3g²pA − (J² − p²)A² (triplet sector)

where p is the (possibly complex) photon detuning and A the (possibly
complex) optical detuning: spontaneous emission dresses A = Δ − iγ/2 with
real p = δ, cavity decay dresses p = δ − iκ/2 with real A = Δ.  At the
engineered detuning δ* the real part of D1 vanishes, which is what makes the
D1-denominated decay channels dominant there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .model import (
    CollapseChannel,
    ModelParams,
    TargetStates,
    build_collapse_channels,
    build_drive,
    build_H0,
    build_Hg,
    delta_star,
)
from .operators import SparseOperator
from .space import AtomLevel, BasisState, StateSpace

__all__ = [
    "SubspaceSplit",
    "split_by_excitation",
    "ClosedFormContext",
    "EffectiveModel",
    "NearSingularError",
    "build_H_NH",
    "reduce_effective",
    "closed_form_gamma",
    "closed_form_kappa",
    "dominant_channels",
    "RegimeCheck",
    "RegimeReport",
    "regime_check",
    "dump_coefficients",
]


@dataclass(frozen=True)
class SubspaceSplit:
    """Index split of a state space into the ground manifold and the rest."""

    ground: np.ndarray
    excited: np.ndarray


def split_by_excitation(space: StateSpace) -> SubspaceSplit:
    ground = space.ground_indices
    excited = np.nonzero(space.excitations >= 1)[0]
    return SubspaceSplit(ground=ground, excited=excited)


@dataclass(frozen=True)
class ClosedFormContext:
    """Complex scalars the closed-form coefficient tables are written in.

    ``Delta_t`` (Δ̃ = Δ − iγ/2) dresses the optical detuning in the
    spontaneous-emission case; ``delta_t`` (δ̃ = δ − iκ/2) dresses the photon
    detuning in the cavity-decay case.  ``Jt2`` and ``Jt2_t`` are J² − δ² and
    J² − δ̃²; both reduce to the same real number when the corresponding rate
    vanishes.
    """

    delta_t: complex
    Delta_t: complex
    Jt2: float
    Jt2_t: complex

    @classmethod
    def from_params(cls, params: ModelParams) -> "ClosedFormContext":
        delta_t = params.delta - 0.5j * params.kappa
        return cls(
            delta_t=delta_t,
            Delta_t=params.Delta - 0.5j * params.gamma,
            Jt2=params.J**2 - params.delta**2,
            Jt2_t=params.J**2 - delta_t**2,
        )


class NearSingularError(RuntimeError):
    """The effective reduction is singular (or nearly so) at these parameters.

    This happens on resonances of the single-excitation sector — most
    prominently at the engineered detuning with both decay rates at zero,
    where the excited manifold has an undamped mode and no effective model
    exists.
    """

    def __init__(self, params: ModelParams, cond: float, threshold: float) -> None:
        self.params = params
        self.cond = cond
        super().__init__(
            f"effective reduction is near-singular "
            f"(amplification {cond:.3e} > {threshold:.1e}) at parameters "
            f"{params.as_dict()}"
        )


@dataclass(frozen=True)
class EffectiveModel:
    """Effective Hamiltonian and jump operators on the two-atom ground manifold.

    ``channels`` are the induced effective jump operators, labeled exactly
    like their parent collapse channels.  ``provenance`` records how the
    model was built: ``"numeric"``, ``"closed_form_gamma"`` or
    ``"closed_form_kappa"``.
    """

    H_eff: SparseOperator
    channels: tuple[CollapseChannel, ...]
    ground_states: tuple[BasisState, ...]
    params: ModelParams
    provenance: str

    @property
    def dim(self) -> int:
        return len(self.ground_states)

    def pair_index(self, atom1: AtomLevel, atom2: AtomLevel) -> int:
        for i, s in enumerate(self.ground_states):
            if s.atom1 == atom1 and s.atom2 == atom2:
                return i
        raise ValueError(f"({atom1.name}, {atom2.name}) is not a ground state here")

    def ket(self, label: str) -> np.ndarray:
        from .space import atom_pair_from_label

        a1, a2 = atom_pair_from_label(label)
        vec = np.zeros(self.dim, dtype=np.complex128)
        vec[self.pair_index(a1, a2)] = 1.0
        return vec

    def target_vectors(self) -> TargetStates:
        L = AtomLevel
        k_lr = self.ket("gLgR")
        k_rl = self.ket("gRgL")
        k_a0 = self.ket("gag0")
        return TargetStates(
            T1=(k_lr + k_rl + k_a0) / math.sqrt(3.0),
            T2=(k_lr + k_rl - 2.0 * k_a0) / math.sqrt(6.0),
            T3=(k_lr - k_rl) / math.sqrt(2.0),
        )


def build_H_NH(params: ModelParams, space: StateSpace) -> SparseOperator:
    """Non-Hermitian Hamiltonian H0 − (i/2)Σ L†L driving the decaying manifold."""
    h = build_H0(params, space)
    for ch in build_collapse_channels(params, space):
        h = h + (-0.5j) * (ch.op.adjoint() @ ch.op)
    return h


def reduce_effective(
    params: ModelParams,
    space: StateSpace,
    *,
    cond_threshold: float = 1e10,
) -> EffectiveModel:
    """Numeric second-order reduction onto the ground manifold.

    Only the single-excitation block of H_NH enters: the drive populates
    excitation 1 from the ground manifold, and higher blocks never appear at
    this order.  Within that block, the inversion is restricted to the
    connected component actually reached by the drive — the truncated space
    also holds structurally inert excited levels (never coupled, never
    decaying) whose zero rows would otherwise make the full block singular
    while contributing nothing.  A condition-number guard rejects parameter
    sets where the reachable block itself is effectively singular (e.g. no
    dissipation at the engineered detuning δ*).
    """
    ground = space.ground_indices
    exc1 = space.indices_with_excitation(1)
    channels = build_collapse_channels(params, space)
    vplus, _ = build_drive(params, space)

    block_full = build_H_NH(params, space).toarray()[np.ix_(exc1, exc1)]
    vp_full = vplus.toarray()[np.ix_(exc1, ground)]

    # Connected closure of the drive's range under the coupling pattern.
    pattern = sparse.csr_array(np.abs(block_full) > 0)
    n_comp, comp = csgraph.connected_components(pattern, directed=False)
    seeded = set(comp[np.flatnonzero(np.abs(vp_full).any(axis=1))])
    active = np.flatnonzero(np.isin(comp, sorted(seeded)))
    if active.size == 0:
        raise NearSingularError(params, float("inf"), cond_threshold)

    block = block_full[np.ix_(active, active)]
    cond = np.linalg.cond(block)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise NearSingularError(params, float(cond), cond_threshold)

    vp = vp_full[active]
    x = np.linalg.solve(block, vp)
    y = vp.conj().T @ x
    h_eff = -0.5 * (y + y.conj().T)
    h_eff += build_Hg(params, space).toarray()[np.ix_(ground, ground)]

    exc1_active = np.asarray(exc1)[active]
    eff_channels = []
    for ch in channels:
        l_block = ch.op.toarray()[np.ix_(ground, exc1_active)]
        eff_channels.append(CollapseChannel(ch.label, SparseOperator(l_block @ x)))

    return EffectiveModel(
        H_eff=SparseOperator(h_eff),
        channels=tuple(eff_channels),
        ground_states=space.ground_states,
        params=params,
        provenance="numeric",
    )


# -- closed forms -----------------------------------------------------------


def _denominators(
    g: float, J: float, p: complex, A: complex
) -> tuple[complex, complex, complex, complex]:
    J2 = J * J - p * p
    D1 = g * g * p + A * J2
    D2 = 2.0 * g * g * p + A * J2
    D3 = 2.0 * g**4 - 3.0 * g * g * p * A - J2 * A * A
    return J2, D1, D2, D3


def _check_denominators(
    params: ModelParams, p: complex, A: complex, *, threshold: float = 1e10
) -> None:
    # The closed-form coefficients amplify by scale/|D|; refuse the same
    # resonances the numeric reduction detects through its condition number.
    g, J = params.g, params.J
    J2, D1, D2, D3 = _denominators(g, J, p, A)
    scale = g * g * max(abs(p), g) + abs(A) * max(abs(J2), 1e-300)
    worst = scale / max(min(abs(D1), abs(D2), abs(D3)), 1e-300)
    if worst > threshold:
        raise NearSingularError(params, worst, threshold)


class _GroundBasis:
    """Dense helpers over the 16 ground states in space order."""

    def __init__(self, space: StateSpace) -> None:
        self.states = space.ground_states
        self.dim = len(self.states)
        self._idx = {
            (s.atom1, s.atom2): i for i, s in enumerate(self.states)
        }

    def ket(self, a1: AtomLevel, a2: AtomLevel) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self._idx[(a1, a2)]] = 1.0
        return v

    def targets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        L = AtomLevel
        k_lr = self.ket(L.gL, L.gR)
        k_rl = self.ket(L.gR, L.gL)
        k_a0 = self.ket(L.ga, L.g0)
        t1 = (k_lr + k_rl + k_a0) / math.sqrt(3.0)
        t2 = (k_lr + k_rl - 2.0 * k_a0) / math.sqrt(6.0)
        t3 = (k_lr - k_rl) / math.sqrt(2.0)
        return t1, t2, t3


def _heff_ground(
    params: ModelParams, space: StateSpace, gb: _GroundBasis, p: complex, A: complex
) -> np.ndarray:
    """Second-order Stark-shift part of H_eff plus the ground stirring."""
    L = AtomLevel
    g, Om, J = params.g, params.Omega, params.J
    J2, D1, D2, D3 = _denominators(g, J, p, A)
    t1, t2, t3 = gb.targets()

    c_single = Om * Om * (-J2 / D1)
    c_both = Om * Om * (-J2 / D2 - J2 / D1)
    c_t1 = (Om * Om / 3.0) * (g * g * (4.0 * J + 5.0 * p) + 3.0 * J2 * A) / D3
    c_t2 = (Om * Om / 3.0) * (-4.0 * g * g * (J - p) + 3.0 * J2 * A) / D3
    c_cross = (math.sqrt(2.0) * Om * Om / 3.0) * (-g * g * (J - p)) / D3

    h = np.zeros((gb.dim, gb.dim), dtype=np.complex128)
    for a1, a2 in (
        (L.gL, L.gL),
        (L.gR, L.gR),
        (L.g0, L.gL),
        (L.g0, L.gR),
    ):
        k = gb.ket(a1, a2)
        h += c_single.real * np.outer(k, k)
    h += c_single.real * np.outer(t3, t3)
    for a2 in (L.gL, L.gR):
        k = gb.ket(L.ga, a2)
        h += c_both.real * np.outer(k, k)
    # |ga ga⟩ drives atom 1 only; its e0 sits over a doubly-relaxable ground
    # pair, hence the D2 denominator without the D1 partner.
    k = gb.ket(L.ga, L.ga)
    h += (Om * Om * (-J2 / D2)).real * np.outer(k, k)
    h += c_t1.real * np.outer(t1, t1)
    h += c_t2.real * np.outer(t2, t2)
    h += c_cross.real * (np.outer(t1, t2) + np.outer(t2, t1))

    ground = space.ground_indices
    h += build_Hg(params, space).toarray()[np.ix_(ground, ground)]
    return h


def _gamma_channels(
    params: ModelParams, gb: _GroundBasis, p: complex, A: complex
) -> list[CollapseChannel]:
    """Effective spontaneous-emission channels (seven, branching 3×γ/3 + 4×γ/2)."""
    L = AtomLevel
    g, Om, J = params.g, params.Omega, params.J
    J2, D1, D2, D3 = _denominators(g, J, p, A)
    t1, t2, t3 = gb.targets()

    q1 = math.sqrt(params.gamma / 3.0) * Om
    q2 = math.sqrt(params.gamma / 2.0) * Om

    # Amplitudes of the decaying e0 population on the triplet-span sources.
    e0_t1 = -(1.0 / math.sqrt(3.0)) * (g * g * (2.0 * J + p) + J2 * A) / D3
    e0_t2 = (2.0 / math.sqrt(6.0)) * (-g * g * (J - p) + J2 * A) / D3
    # Amplitudes of the decaying eL/eR population on the triplet-span sources.
    u_t1 = -(1.0 / math.sqrt(3.0)) * (g * g * (J + 2.0 * p) + J2 * A) / D3
    u_t2 = (1.0 / math.sqrt(6.0)) * (2.0 * g * g * (J - p) - J2 * A) / D3
    u_t3 = (1.0 / math.sqrt(2.0)) * (J2 / D1)

    channels: list[CollapseChannel] = []
    for x in (L.gL, L.ga, L.gR):
        # Atom-2 spectator column g0 is absent here for the same reason as
        # everywhere else: |ga g0⟩ sits in the triplet span, whose columns
        # the T-sourced terms carry.
        m = (J2 / D2) * sum(
            np.outer(gb.ket(x, y), gb.ket(L.ga, y)) for y in (L.gL, L.gR, L.ga)
        )
        m += np.outer(gb.ket(x, L.g0), e0_t1 * t1 + e0_t2 * t2)
        channels.append(
            CollapseChannel(f"gamma1.{x.name}_from_e0", SparseOperator(q1 * m))
        )

    for tgt in (L.gL, L.g0):
        m = (J2 / D1) * sum(
            np.outer(gb.ket(s, tgt), gb.ket(s, L.gL)) for s in (L.gL, L.ga, L.g0)
        )
        m += np.outer(gb.ket(L.gR, tgt), u_t1 * t1 + u_t2 * t2 - u_t3 * t3)
        channels.append(
            CollapseChannel(f"gamma2.{tgt.name}_from_eL", SparseOperator(q2 * m))
        )
    for tgt in (L.gR, L.g0):
        m = (J2 / D1) * sum(
            np.outer(gb.ket(s, tgt), gb.ket(s, L.gR)) for s in (L.gR, L.ga, L.g0)
        )
        m += np.outer(gb.ket(L.gL, tgt), u_t1 * t1 + u_t2 * t2 + u_t3 * t3)
        channels.append(
            CollapseChannel(f"gamma2.{tgt.name}_from_eR", SparseOperator(q2 * m))
        )
    return channels


def _kappa_channels(
    params: ModelParams, gb: _GroundBasis, p: complex, A: complex
) -> list[CollapseChannel]:
    """Effective cavity-decay channels on the four delocalized modes."""
    L = AtomLevel
    g, Om, J = params.g, params.Omega, params.J
    J2, D1, D2, D3 = _denominators(g, J, p, A)
    t1, t2, t3 = gb.targets()
    root = math.sqrt(params.kappa) * Om
    rt2 = math.sqrt(2.0)

    f_plus = g * (J + p)
    f_minus = g * (J - p)
    spect_1 = -f_plus / (rt2 * D1)
    spect_2 = -f_minus / (rt2 * D1)
    e0_1 = f_plus / (rt2 * D2)
    e0_2 = -f_minus / (rt2 * D2)
    t1_c1 = -math.sqrt(6.0) * g**3 / (6.0 * D3)
    t2_c1 = math.sqrt(3.0) * g * (3.0 * A * (J + p) - 4.0 * g * g) / (6.0 * D3)
    t1_c2 = math.sqrt(6.0) * g * (3.0 * g * g + 2.0 * A * (J - p)) / (6.0 * D3)
    t2_c2 = -math.sqrt(3.0) * g * A * (J - p) / (6.0 * D3)
    t3_c1 = f_plus / (2.0 * D1)
    t3_c2 = f_minus / (2.0 * D1)

    def build(
        spect_src2: AtomLevel,
        e0_tgt1: AtomLevel,
        spect_amp: complex,
        e0_amp: complex,
        w_t1: complex,
        w_t2: complex,
        w_t3: complex,
    ) -> SparseOperator:
        # Atom-1 spectator terms cover every level except the one whose
        # column state |s, src2⟩ belongs to the triplet span — that column
        # is carried by the T-sourced terms below.  Same rule for the
        # atom-2 spectator of the e0 path, which excludes g0.
        excluded = L.gL if spect_src2 == L.gR else L.gR
        spectators = tuple(s for s in (L.gL, L.ga, L.gR, L.g0) if s != excluded)
        m = spect_amp * sum(
            np.outer(gb.ket(s, L.g0), gb.ket(s, spect_src2)) for s in spectators
        )
        m += e0_amp * sum(
            np.outer(gb.ket(e0_tgt1, x), gb.ket(L.ga, x))
            for x in (L.gL, L.gR, L.ga)
        )
        m += np.outer(gb.ket(e0_tgt1, L.g0), w_t1 * t1 + w_t2 * t2 + w_t3 * t3)
        return SparseOperator(root * m)

    return [
        CollapseChannel(
            "kappa.cL1", build(L.gR, L.gL, spect_1, e0_1, t1_c1, t2_c1, -t3_c1)
        ),
        CollapseChannel(
            "kappa.cL2", build(L.gR, L.gL, spect_2, e0_2, t1_c2, t2_c2, -t3_c2)
        ),
        CollapseChannel(
            "kappa.cR1", build(L.gL, L.gR, spect_1, e0_1, t1_c1, t2_c1, t3_c1)
        ),
        CollapseChannel(
            "kappa.cR2", build(L.gL, L.gR, spect_2, e0_2, t1_c2, t2_c2, t3_c2)
        ),
    ]


def closed_form_gamma(params: ModelParams, space: StateSpace) -> EffectiveModel:
    """Closed-form effective model for pure spontaneous emission (κ = 0).

    The coefficient tables cover the 12-dim sector with atom 2 outside ga
    (plus the stirring Hamiltonian everywhere); the atom-2 ga sector is
    dynamically decoupled from it, so trajectories started inside the
    12-dim sector match the numeric reduction exactly.
    """
    if params.kappa != 0:
        raise ValueError("closed_form_gamma requires kappa = 0")
    gb = _GroundBasis(space)
    p = complex(params.delta)
    A = params.Delta - 0.5j * params.gamma
    _check_denominators(params, p, A)
    h = _heff_ground(params, space, gb, p, A)
    channels = _gamma_channels(params, gb, p, A) if params.gamma > 0 else []
    return EffectiveModel(
        H_eff=SparseOperator(h),
        channels=tuple(channels),
        ground_states=gb.states,
        params=params,
        provenance="closed_form_gamma",
    )


def closed_form_kappa(params: ModelParams, space: StateSpace) -> EffectiveModel:
    """Closed-form effective model for pure cavity decay (γ = 0)."""
    if params.gamma != 0:
        raise ValueError("closed_form_kappa requires gamma = 0")
    gb = _GroundBasis(space)
    p = params.delta - 0.5j * params.kappa
    A = complex(params.Delta)
    _check_denominators(params, p, A)
    h = _heff_ground(params, space, gb, p, A)
    channels = _kappa_channels(params, gb, p, A) if params.kappa > 0 else []
    return EffectiveModel(
        H_eff=SparseOperator(h),
        channels=tuple(channels),
        ground_states=gb.states,
        params=params,
        provenance="closed_form_kappa",
    )


def dominant_channels(
    model: EffectiveModel, cutoff: float = 0.2
) -> tuple[EffectiveModel, dict[str, dict[str, float]]]:
    """Prune weak effective decay terms.

    Entries whose magnitude falls strictly below ``cutoff`` times the largest
    entry across all channels are dropped; channels left empty disappear from
    the list.  Returns the pruned model and a per-channel report of kept/
    dropped entry counts and the Frobenius weight of what was discarded.
    ``cutoff = 0`` keeps everything; ``cutoff >= 1`` keeps only the globally
    largest entries (ties included).
    """
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    gmax = max((ch.op.max_abs() for ch in model.channels), default=0.0)
    floor = cutoff * gmax
    kept: list[CollapseChannel] = []
    report: dict[str, dict[str, float]] = {}
    for ch in model.channels:
        dense = ch.op.toarray()
        mask = np.abs(dense) >= floor if floor > 0 else np.ones_like(dense, bool)
        pruned = np.where(mask, dense, 0.0)
        n_kept = int(np.count_nonzero(pruned))
        discarded = float(np.linalg.norm(dense - pruned))
        report[ch.label] = {
            "kept_entries": n_kept,
            "dropped_entries": int(ch.op.nnz - n_kept),
            "discarded_weight": discarded,
        }
        if n_kept:
            kept.append(CollapseChannel(ch.label, SparseOperator(pruned)))
    pruned_model = EffectiveModel(
        H_eff=model.H_eff,
        channels=tuple(kept),
        ground_states=model.ground_states,
        params=model.params,
        provenance=model.provenance,
    )
    return pruned_model, report


# -- regime diagnostics ------------------------------------------------------


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float
    threshold: float
    satisfied: bool
    description: str


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple[RegimeCheck, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def __getitem__(self, name: str) -> RegimeCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def regime_check(params: ModelParams) -> RegimeReport:
    """Evaluate the perturbative orderings the reduction relies on.

    Purely advisory: each inequality is reported as a ratio with a flag; no
    exception is raised.
    """
    g, Om, om = params.g, params.Omega, params.omega
    d_star = delta_star(g, params.J, params.Delta) if params.Delta != 0 else math.nan

    def ratio_over(num: float, den: float) -> float:
        if den == 0:
            return math.inf if num > 0 else 0.0
        return num / den

    delta_over_gamma = ratio_over(params.Delta, params.gamma)
    delta_over_kappa = ratio_over(params.delta, params.kappa)
    omega2_over_omega = ratio_over(Om * Om, om) if om or Om else 0.0
    dd_ratio = params.delta * params.Delta / (2.0 * g * g)
    star_offset = (
        abs(params.delta - d_star) / abs(d_star) if d_star and not math.isnan(d_star) else math.inf
    )

    checks = (
        RegimeCheck(
            "Delta_over_gamma",
            delta_over_gamma,
            10.0,
            delta_over_gamma >= 10.0,
            "optical detuning must dominate the atomic linewidth",
        ),
        RegimeCheck(
            "delta_Delta_vs_2g2",
            dd_ratio,
            1.0,
            dd_ratio >= 1.0,
            "two-photon detuning product must reach 2g^2",
        ),
        RegimeCheck(
            "Omega_sq_over_omega",
            omega2_over_omega,
            0.1,
            omega2_over_omega <= 0.1,
            "second-order light shifts must stay below the stirring rate",
        ),
        RegimeCheck(
            "delta_over_kappa",
            delta_over_kappa,
            10.0,
            delta_over_kappa >= 10.0,
            "cavity detuning must dominate the cavity linewidth",
        ),
        RegimeCheck(
            "Omega_over_g",
            ratio_over(Om, g),
            0.1,
            ratio_over(Om, g) <= 0.1,
            "drive must be weak against the atom-cavity coupling",
        ),
        RegimeCheck(
            "delta_offset_from_star",
            star_offset,
            1e-6,
            star_offset <= 1e-6,
            "detuning should sit at the engineered value delta*",
        ),
    )
    return RegimeReport(checks)


def dump_coefficients(model: EffectiveModel, path) -> None:
    """Write the effective-operator coefficient table as CSV.

    Columns: label, row_state, col_state, real, imag — one row per stored
    entry of H_eff and of every channel, in deterministic order.
    """
    def fmt(x: float) -> str:
        return f"{x:.12g}"

    lines = ["label,row_state,col_state,real,imag"]
    blocks: list[tuple[str, SparseOperator]] = [("H_eff", model.H_eff)]
    blocks += [(ch.label, ch.op) for ch in model.channels]
    for label, op in blocks:
        for r, c, v in op.entries():
            lines.append(
                f"{label},{model.ground_states[r].label()},"
                f"{model.ground_states[c].label()},{fmt(v.real)},{fmt(v.imag)}"
            )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
