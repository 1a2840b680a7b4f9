"""Lindblad propagation, jump-conditioned feedback, and direct steady states.

The integrator is a fixed-step classical fourth-order scheme for

    ρ̇ = −i[H, ρ] + Σⱼ (Lʲ ρ Lʲ† − ½{Lʲ†Lʲ, ρ}),

evaluated in folded form: with K = H − (i/2)ΣⱼLʲ†Lʲ the right-hand side for
Hermitian ρ is −i(Kρ − (Kρ)†) + Σⱼ Mʲ ρ Mʲ†, one dense matrix product per
stage plus cheap compressed sandwiches.  Without feedback Mʲ = Lʲ; when a
jump on channel j triggers a correction unitary U the sandwich operator
becomes Mʲ = U·Lʲ while the anticommutator keeps the bare Lʲ — the standard
feedback master equation.  Since U is unitary on the jump range, Mʲ†Mʲ =
Lʲ†Lʲ and trace preservation is untouched; this is asserted at build time.

Propagation runs through the kernel selected in :mod:`tricav.kernels` and
monitors trace, hermiticity and (at a few checkpoints) positivity, raising
:class:`IntegrationError` rather than returning silently corrupted output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .effective import EffectiveModel
from .model import CollapseChannel, ground_state_vector, target_states
from .operators import SparseOperator
from .space import AtomLevel, StateSpace

__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "ObservableSet",
    "Trajectory",
    "FeedbackScheme",
    "build_feedback_unitary",
    "lindblad_rhs",
    "evolve",
    "evolve_with_feedback",
    "fidelity",
    "suggest_step",
    "liouvillian_matrix",
    "SteadyStateResult",
    "DegenerateSteadyStateError",
    "steady_state_direct",
]


class IntegrationError(RuntimeError):
    """Propagation violated a runtime invariant (trace, hermiticity, positivity)."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    ``record_every`` thins the output: diagnostics and observables are stored
    every that many steps (sample 0 included).  ``positivity_checks`` full
    spectra are computed along the way — positivity is the one invariant too
    expensive to watch at every sample.
    """

    step: float
    t_final: float
    record_every: int = 1
    trace_tolerance: float = 1e-6
    positivity_tolerance: float = 1e-8
    positivity_checks: int = 4
    hermiticity_tolerance: float = 1e-10

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.t_final < self.step:
            raise ValueError("t_final must cover at least one step")
        if self.record_every < 1:
            raise ValueError("record_every must be a positive integer")
        if self.positivity_checks < 1:
            raise ValueError("positivity_checks must be a positive integer")
        for name in ("trace_tolerance", "positivity_tolerance", "hermiticity_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def suggest_step(H: SparseOperator, channels: Sequence[CollapseChannel],
                 *, resolution: float = 50.0, floor: float = 1e-6) -> float:
    """Step size resolving the fastest scale of (H, channels) by ``resolution``.

    The rate estimate is the ∞-norm of H and of every L†L; ``floor`` keeps the
    result finite for an (almost) trivial generator.
    """
    def inf_norm(op: SparseOperator) -> float:
        m = abs(op.tocsr())
        return float(m.sum(axis=1).max()) if op.nnz else 0.0

    rate = max(inf_norm(H), floor)
    for ch in channels:
        rate = max(rate, inf_norm(ch.op.adjoint() @ ch.op))
    return 1.0 / (resolution * rate)


# ---------------------------------------------------------------------------
# observables


class ObservableSet:
    """Labelled pure-state projectors |v⟩⟨v| recorded during propagation.

    Only projector expectations ⟨v|ρ|v⟩ are supported — that is all the
    scheme's figures of merit need, and it keeps the kernel's per-sample work
    at two matrix–vector products per observable.
    """

    def __init__(self, labels: Sequence[str], vectors: Sequence[np.ndarray]) -> None:
        labels = tuple(labels)
        if len(labels) != len(set(labels)):
            raise ValueError("observable labels must be unique")
        if len(labels) != len(vectors):
            raise ValueError("labels and vectors must have equal length")
        if vectors:
            mat = np.ascontiguousarray(np.vstack(vectors), dtype=np.complex128)
            if mat.ndim != 2:
                raise ValueError("observable vectors must be one-dimensional")
        else:
            mat = np.zeros((0, 0), dtype=np.complex128)
        self._labels = labels
        self._matrix = mat

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    def __len__(self) -> int:
        return len(self._labels)

    def extended(self, label: str, vector: np.ndarray) -> "ObservableSet":
        """A copy with one more projector appended."""
        return ObservableSet(self._labels + (label,), [*self._matrix, vector])

    @classmethod
    def empty(cls, dim: int) -> "ObservableSet":
        out = cls((), ())
        out._matrix = np.zeros((0, dim), dtype=np.complex128)
        return out

    @classmethod
    def standard(cls, source) -> "ObservableSet":
        """The canonical output columns shared by every scenario.

        ``source`` is either a :class:`StateSpace` (full model) or an
        :class:`EffectiveModel` (ground-manifold model); the same labels come
        out either way, so downstream CSV files are directly comparable.
        ``fidelity_T1`` and ``pop_T1`` are intentionally the same number —
        the first is the headline name, the second keeps the population
        block complete.
        """
        if isinstance(source, EffectiveModel):
            targets = source.target_vectors()
            ket = source.ket
        elif isinstance(source, StateSpace):
            targets = target_states(source)
            ket = lambda label: ground_state_vector(source, label)  # noqa: E731
        else:
            raise TypeError(f"expected StateSpace or EffectiveModel, got {type(source).__name__}")
        labels = ["fidelity_T1", "pop_T1", "pop_T2", "pop_T3",
                  "pop_gLg0", "pop_gRg0", "pop_gagL"]
        vectors = [targets.T1, targets.T1, targets.T2, targets.T3,
                   ket("gLg0"), ket("gRg0"), ket("gagL")]
        return cls(labels, vectors)


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    """Recorded output of one propagation run.

    All arrays share the length of ``times``; ``observables`` maps each label
    to its expectation series.  ``hermiticity_drift[r]`` is the largest
    asymmetry the integrator projected out of ρ between samples r−1 and r
    (machine-noise sized in a healthy run).  ``positivity_times`` /
    ``positivity_min_eig`` are the sparse spectrum checkpoints.
    """

    times: np.ndarray
    observables: Mapping[str, np.ndarray]
    trace_drift: np.ndarray
    hermiticity_drift: np.ndarray
    rhs_max: np.ndarray
    positivity_times: np.ndarray
    positivity_min_eig: np.ndarray
    rho_final: np.ndarray

    @property
    def fidelity(self) -> np.ndarray:
        return np.asarray(self.observables["fidelity_T1"])

    def final(self, label: str) -> float:
        return float(self.observables[label][-1])

    def steady_state_reached(self, threshold: float = 1e-9, window: int = 100) -> bool:
        """True if ‖ρ̇‖_max stayed below ``threshold`` for ``window`` consecutive samples."""
        below = self.rhs_max < threshold
        if below.size < window:
            return False
        run = np.convolve(below.astype(np.int64), np.ones(window, dtype=np.int64), "valid")
        return bool((run == window).any())


# ---------------------------------------------------------------------------
# feedback


@dataclass(frozen=True)
class FeedbackScheme:
    """Correction unitaries keyed by collapse-channel label.

    A label that matches no channel of the model being propagated is inert:
    that channel never fires, so there is nothing to correct.  (This is what
    makes a cavity-triggered correction a no-op in the κ = 0 column of a
    sweep rather than an error.)
    """

    unitaries: Mapping[str, SparseOperator]

    @classmethod
    def identity(cls) -> "FeedbackScheme":
        return cls({})

    def unitary_for(self, label: str):
        return self.unitaries.get(label)


_FEEDBACK_PARTNERS = {
    "sigma_x1": (AtomLevel.g0, AtomLevel.gR),
    "sigma_x2": (AtomLevel.g0, AtomLevel.eR),
}


def _pair_rotation(dim: int, pairs: Sequence[tuple[int, int]]) -> SparseOperator:
    # exp(iπσ/2) = 1 − P + iσ with P the projector on the paired subspace:
    # identity outside, i·(swap) on each complete two-state block.
    rows, cols, vals = [], [], []
    paired = {i for pair in pairs for i in pair}
    for i in range(dim):
        if i not in paired:
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
    for i, j in pairs:
        rows += [i, j]
        cols += [j, i]
        vals += [1j, 1j]
    return SparseOperator.from_entries(dim, rows, cols, vals)


def build_feedback_unitary(which: str, space) -> SparseOperator:
    """π-pulse correction exp(iπσ/2) on atom 2, as a unitary on ``space``.

    ``which`` selects σ: ``"sigma_x1"`` swaps |g0⟩₂ ↔ |gR⟩₂ (ground–ground),
    ``"sigma_x2"`` swaps |g0⟩₂ ↔ |eR⟩₂ (ground–excited).  ``space`` is either
    a :class:`StateSpace` or an :class:`EffectiveModel`; the ground-manifold
    variant rejects ``sigma_x2`` because |eR⟩ has been adiabatically
    eliminated there.

    The rotation is applied only on two-state blocks whose both partners
    exist in the (truncated) space and is the identity elsewhere, so the
    result is exactly unitary at any truncation.  Every jump output lies in a
    complete block, hence U·L carries the full correction.
    """
    try:
        lo, hi = _FEEDBACK_PARTNERS[which]
    except KeyError:
        raise ValueError(
            f"unknown feedback generator {which!r}; expected 'sigma_x1' or 'sigma_x2'"
        ) from None

    if isinstance(space, EffectiveModel):
        if hi.is_excited:
            raise ValueError(
                f"{which} couples atom 2 to an excited level, which the "
                "ground-manifold model has eliminated; use the full model"
            )
        pairs = []
        for a1 in (AtomLevel.gL, AtomLevel.g0, AtomLevel.gR, AtomLevel.ga):
            pairs.append((space.pair_index(a1, lo), space.pair_index(a1, hi)))
        return _pair_rotation(space.dim, pairs)

    if not isinstance(space, StateSpace):
        raise TypeError(f"expected StateSpace or EffectiveModel, got {type(space).__name__}")

    pairs = []
    for idx, state in enumerate(space.states):
        if state.atom2 != lo:
            continue
        partner = state._replace(atom2=hi)
        if partner.excitation() <= space.max_excitation and all(
            n <= space.per_mode_cap for n in partner.photons
        ):
            pairs.append((idx, space.index_of(partner)))
    return _pair_rotation(space.dim, pairs)


# ---------------------------------------------------------------------------
# right-hand side (reference form, used for residuals and tests)


def _as_dense(op) -> np.ndarray:
    if isinstance(op, SparseOperator):
        return op.toarray()
    return np.asarray(op, dtype=np.complex128)


def _channel_op(ch) -> np.ndarray:
    return _as_dense(getattr(ch, "op", ch))


def lindblad_rhs(H, channels, rho: np.ndarray) -> np.ndarray:
    """Dense ρ̇ = −i[H,ρ] + Σⱼ(LʲρLʲ† − ½{Lʲ†Lʲ,ρ}).

    This is the plain textbook form, independent of the folded kernel — it
    doubles as the oracle the kernels are tested against and as the residual
    used by the steady-state solver.  ``channels`` may hold
    :class:`CollapseChannel` objects or bare operators.
    """
    h = _as_dense(H)
    rho = np.asarray(rho, dtype=np.complex128)
    out = -1j * (h @ rho - rho @ h)
    for ch in channels:
        l_op = _channel_op(ch)
        ll = l_op.conj().T @ l_op
        out += l_op @ rho @ l_op.conj().T - 0.5 * (ll @ rho + rho @ ll)
    return out


# ---------------------------------------------------------------------------
# propagation


def _compress(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    nz = np.abs(mat) > 0
    tgt = np.flatnonzero(nz.any(axis=1)).astype(np.int64)
    src = np.flatnonzero(nz.any(axis=0)).astype(np.int64)
    block = np.ascontiguousarray(mat[np.ix_(tgt, src)])
    return block, src, tgt


def _pack_channels(mats: Sequence[np.ndarray]):
    s_parts: list[np.ndarray] = []
    src_parts: list[np.ndarray] = []
    tgt_parts: list[np.ndarray] = []
    s_off, src_off, tgt_off = [0], [0], [0]
    for mat in mats:
        block, src, tgt = _compress(mat)
        if src.size == 0 or tgt.size == 0:
            continue  # structurally zero channel
        s_parts.append(block.ravel())
        src_parts.append(src)
        tgt_parts.append(tgt)
        s_off.append(s_off[-1] + block.size)
        src_off.append(src_off[-1] + src.size)
        tgt_off.append(tgt_off[-1] + tgt.size)

    def cat(parts, dtype):
        return np.concatenate(parts) if parts else np.zeros(0, dtype=dtype)

    return (
        cat(s_parts, np.complex128),
        np.asarray(s_off, dtype=np.int64),
        cat(src_parts, np.int64),
        np.asarray(src_off, dtype=np.int64),
        cat(tgt_parts, np.int64),
        np.asarray(tgt_off, dtype=np.int64),
    )


def _validate_initial(rho0: np.ndarray, dim: int) -> np.ndarray:
    rho = np.array(rho0, dtype=np.complex128, order="C", copy=True)
    if rho.shape != (dim, dim):
        raise ValueError(f"initial state has shape {rho.shape}, expected {(dim, dim)}")
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ValueError("initial state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise ValueError("initial state is not normalized")
    if np.linalg.eigvalsh(rho)[0] < -1e-8:
        raise ValueError("initial state has a negative eigenvalue")
    return rho


def evolve_with_feedback(
    H: SparseOperator,
    channels: Sequence[CollapseChannel],
    rho0: np.ndarray,
    config: IntegratorConfig,
    scheme: FeedbackScheme,
    observables: ObservableSet | None = None,
) -> Trajectory:
    """Propagate ρ0 under (H, channels) with jump-conditioned corrections.

    For every channel whose label appears in ``scheme`` the recycling term
    uses M = U·L; the no-jump part is unchanged.  Each M must satisfy
    M†M = L†L to machine precision, otherwise the scheme is rejected.
    """
    dim = H.dim
    rho = _validate_initial(rho0, dim)
    if observables is None:
        observables = ObservableSet.empty(dim)
    if len(observables) and observables.dim != dim:
        raise ValueError(f"observable dimension {observables.dim} does not match state dimension {dim}")

    decay = SparseOperator.zero(dim)
    m_mats: list[np.ndarray] = []
    for ch in channels:
        if ch.op.dim != dim:
            raise ValueError(f"channel {ch.label!r} has dimension {ch.op.dim}, expected {dim}")
        decay = decay + ch.op.adjoint() @ ch.op
        u = scheme.unitary_for(ch.label)
        if u is None:
            m_op = ch.op
        else:
            m_op = u @ ch.op
            drift = (m_op.adjoint() @ m_op - ch.op.adjoint() @ ch.op).max_abs()
            if drift > 1e-10:
                raise ValueError(
                    f"feedback unitary on {ch.label!r} distorts the jump weight "
                    f"(max |M†M − L†L| = {drift:.2e}); it must be unitary on the jump range"
                )
        m_mats.append(m_op.toarray())

    k_fold = H.toarray() - 0.5j * decay.toarray()
    packed = _pack_channels(m_mats)

    n_steps = max(1, int(math.ceil(config.t_final / config.step - 1e-9)))
    rec = config.record_every
    n_steps = ((n_steps + rec - 1) // rec) * rec
    n_samples = n_steps // rec + 1
    times = np.arange(n_samples, dtype=np.float64) * (rec * config.step)

    out_obs = np.zeros((n_samples, len(observables)), dtype=np.float64)
    out_trace = np.zeros(n_samples, dtype=np.float64)
    out_herm = np.zeros(n_samples, dtype=np.float64)
    out_rhs = np.zeros(n_samples, dtype=np.float64)

    checkpoints = np.unique(
        np.linspace(0, n_samples - 1, config.positivity_checks + 1).round().astype(int)
    )
    pos_times: list[float] = []
    pos_eigs: list[float] = []

    def check_positivity(r: int) -> None:
        w = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        pos_times.append(float(times[r]))
        pos_eigs.append(w)
        if w < -config.positivity_tolerance:
            raise IntegrationError(
                f"density matrix lost positivity at t={times[r]:g} "
                f"(minimum eigenvalue {w:.3e}); reduce the step"
            )

    check_positivity(0)
    for r0, r1 in zip(checkpoints[:-1], checkpoints[1:]):
        # The kernel reports, per sample, the largest asymmetry it projected
        # out since the previous sample; its own sample 0 would reset the
        # boundary slot that the previous segment just filled.
        boundary_herm = float(out_herm[r0])
        ret = kernels.run_rk4(
            k_fold,
            *packed,
            rho,
            config.step,
            int(r1 - r0) * rec,
            rec,
            observables.matrix,
            out_obs[r0 : r1 + 1],
            out_trace[r0 : r1 + 1],
            out_herm[r0 : r1 + 1],
            out_rhs[r0 : r1 + 1],
            config.trace_tolerance,
        )
        if ret < 0:
            bad = int(r0) + (-int(ret) - 1)
            raise IntegrationError(
                f"trace drifted by {out_trace[bad]:.3e} at t={times[bad]:g} "
                f"(tolerance {config.trace_tolerance:g}); reduce the step"
            )
        if not np.isfinite(rho).all():
            raise IntegrationError("state became non-finite during propagation")
        out_herm[r0] = max(float(out_herm[r0]), boundary_herm)
        seg_herm = float(out_herm[r0 : r1 + 1].max())
        if seg_herm > config.hermiticity_tolerance:
            raise IntegrationError(
                f"hermiticity drift {seg_herm:.3e} exceeded "
                f"{config.hermiticity_tolerance:g} by t={times[r1]:g}"
            )
        check_positivity(int(r1))

    series = {label: out_obs[:, i].copy() for i, label in enumerate(observables.labels)}
    return Trajectory(
        times=times,
        observables=series,
        trace_drift=out_trace,
        hermiticity_drift=out_herm,
        rhs_max=out_rhs,
        positivity_times=np.asarray(pos_times),
        positivity_min_eig=np.asarray(pos_eigs),
        rho_final=rho,
    )


def evolve(
    H: SparseOperator,
    channels: Sequence[CollapseChannel],
    rho0: np.ndarray,
    config: IntegratorConfig,
    observables: ObservableSet | None = None,
) -> Trajectory:
    """Propagate ρ0 under (H, channels) without feedback."""
    return evolve_with_feedback(H, channels, rho0, config, FeedbackScheme.identity(), observables)


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """⟨target|ρ|target⟩ for a pure target state (real up to numerical noise)."""
    target = np.asarray(target, dtype=np.complex128)
    value = complex(target.conj() @ np.asarray(rho) @ target)
    if abs(value.imag) > 1e-10:
        raise ValueError(f"fidelity has a non-negligible imaginary part ({value.imag:.2e})")
    return float(value.real)


# ---------------------------------------------------------------------------
# steady states


def liouvillian_matrix(H, channels) -> np.ndarray:
    """The generator as a d²×d² matrix acting on row-major-vectorized ρ."""
    h = _as_dense(H)
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for ch in channels:
        l_op = _channel_op(ch)
        ll = l_op.conj().T @ l_op
        gen += np.kron(l_op, l_op.conj())
        gen -= 0.5 * (np.kron(ll, eye) + np.kron(eye, ll.T))
    return gen


@dataclass(frozen=True)
class SteadyStateResult:
    """A stationary density matrix with its residual and the null-space size."""

    rho: np.ndarray
    residual: float
    null_dimension: int


class DegenerateSteadyStateError(RuntimeError):
    """The generator has several steady states and no selection rule was given."""

    def __init__(self, null_dimension: int, message: str) -> None:
        super().__init__(message)
        self.null_dimension = null_dimension


def steady_state_direct(
    model: EffectiveModel,
    rho0: np.ndarray | None = None,
    *,
    rcond: float = 1e-9,
) -> SteadyStateResult:
    """Stationary state of the ground-manifold model by direct null-space solve.

    The ground manifold splits into disconnected blocks, so the generator's
    null space is generically several-dimensional.  With a unique null vector
    the normalized state is returned directly.  Otherwise ``rho0`` must be
    supplied, and the stationary state actually reached from it is selected
    by matching the conserved quantities: for left null vectors wⱼ and right
    null vectors xₖ of the generator, tr(wⱼ†ρ) is constant in time, so the
    coefficients c solve Σₖ ⟨wⱼ, xₖ⟩ cₖ = ⟨wⱼ, vec(ρ0)⟩.
    """
    gen = liouvillian_matrix(model.H_eff, model.channels)
    d = model.dim
    u, s, vh = np.linalg.svd(gen)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    null_mask = s <= rcond * scale
    k = int(null_mask.sum())
    if k == 0:
        raise RuntimeError(
            f"no numerical null vector at rcond={rcond:g}; "
            f"smallest singular value {s[-1]:.3e}"
        )

    right = [vh[i].conj() for i in np.flatnonzero(null_mask)]
    if k == 1:
        rho = right[0].reshape(d, d)
        tr = np.trace(rho)
        if abs(tr) < 1e-12:
            raise DegenerateSteadyStateError(
                k, "the unique null vector is traceless and cannot be normalized"
            )
        rho = rho / tr
    else:
        if rho0 is None:
            raise DegenerateSteadyStateError(
                k,
                f"steady manifold has dimension {k}; pass rho0 to select the "
                "state reached from a given initial condition",
            )
        rho_init = _validate_initial(rho0, d)
        left = [u[:, i] for i in np.flatnonzero(null_mask)]
        gram = np.array([[wj.conj() @ xk for xk in right] for wj in left])
        target = np.array([wj.conj() @ rho_init.reshape(-1) for wj in left])
        if np.linalg.cond(gram) > 1e12:
            raise DegenerateSteadyStateError(
                k, "conserved-quantity system is singular; cannot select a branch"
            )
        coeff = np.linalg.solve(gram, target)
        rho = sum(c * x for c, x in zip(coeff, right)).reshape(d, d)

    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    if abs(tr) < 1e-12:
        raise DegenerateSteadyStateError(k, "selected stationary state is traceless")
    rho = rho / tr
    residual = float(np.abs(lindblad_rhs(model.H_eff, model.channels, rho)).max())
    return SteadyStateResult(rho=rho, residual=residual, null_dimension=k)
