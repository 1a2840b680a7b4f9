"""Model construction: symmetries, branching weights, and the engineered detuning.

Expected numbers in here are frozen from the defining algebra, not from the
implementation: the detuning is checked as the root of its polynomial, the
mode-mixing identities against independently assembled dense matrices, and
the branching sums against projectors built level by level.
"""

import math

import numpy as np
import pytest

from tricav.dynamics import lindblad_rhs
from tricav.model import (
    CHANNEL_LABELS,
    ModelParams,
    build_H0,
    build_H_full,
    build_Hg,
    build_collapse_channels,
    build_drive,
    delocalized_modes,
    delta_star,
    ground_state_vector,
    target_states,
)
from tricav.operators import SparseOperator, commutator
from tricav.space import AtomLevel, ModeId, lift_atom_op, lift_mode_annihilator
from tricav.space import excitation_number_op

from conftest import random_density


# -- engineered detuning -----------------------------------------------------


def test_delta_star_is_root_of_resonance_polynomial():
    for g, J, D in [(1.0, 6.0, 1.0), (1.0, 5.0, 1.0), (2.0, 7.0, 0.5), (1.0, 6.0, -1.0)]:
        d = delta_star(g, J, D)
        assert g * g * d + D * (J * J - d * d) == pytest.approx(0.0, abs=1e-10)


def test_delta_star_frozen_values():
    # (1 + sqrt(1 + 4*36))/2 for the default geometry
    assert delta_star(1.0, 6.0, 1.0) == pytest.approx(6.520797289396148, abs=1e-14)
    # g = J = Delta = 1 gives the golden ratio
    assert delta_star(1.0, 1.0, 1.0) == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-14)


def test_delta_star_rejects_zero_detuning():
    with pytest.raises(ValueError, match="Delta = 0"):
        delta_star(1.0, 6.0, 0.0)


def test_params_resolve_delta_by_default():
    p = ModelParams(Omega=0.01)
    assert p.delta == pytest.approx(delta_star(1.0, 6.0, 1.0))
    pinned = ModelParams(Omega=0.01, delta=5.0)
    assert pinned.delta == 5.0
    assert set(p.as_dict()) == {"g", "Omega", "omega", "Delta", "J", "delta", "kappa", "gamma"}


def test_params_validation():
    with pytest.raises(ValueError, match="g must be positive"):
        ModelParams(g=0.0)
    with pytest.raises(ValueError, match="non-negative"):
        ModelParams(kappa=-0.1)
    with pytest.raises(ValueError, match="non-negative"):
        ModelParams(gamma=-1.0)


# -- Hamiltonian structure ---------------------------------------------------


@pytest.fixture(scope="module")
def params():
    return ModelParams(Omega=0.01, omega=0.002, gamma=0.04, kappa=0.05)


def test_hamiltonian_hermiticity(params, space):
    assert build_H0(params, space).is_hermitian()
    assert build_Hg(params, space).is_hermitian()
    assert build_H_full(params, space).is_hermitian()
    vplus, vminus = build_drive(params, space)
    assert (vplus.adjoint() - vminus).max_abs() == 0.0


def test_excitation_conservation(params, space):
    n = excitation_number_op(space)
    assert commutator(build_H0(params, space), n).max_abs() <= 1e-12
    assert commutator(build_Hg(params, space), n).max_abs() <= 1e-12
    vplus, _ = build_drive(params, space)
    # [N, V+] = V+ : the drive raises the excitation count by exactly one
    assert (commutator(n, vplus) - vplus).max_abs() <= 1e-12


def test_stirring_annihilates_target(params, space):
    hg = build_Hg(params, space)
    t = target_states(space)
    assert np.abs(hg.apply(t.T1)).max() <= 1e-14
    # ... and only the target: its triplet partners are stirred
    assert np.abs(hg.apply(t.T2)).max() > 1e-4


def test_target_triplet_orthonormal(space):
    t = target_states(space)
    basis = np.array([t.T1, t.T2, t.T3])
    np.testing.assert_allclose(basis.conj() @ basis.T, np.eye(3), atol=1e-14)
    k = lambda a, b: space.ket(a, b)  # noqa: E731
    L = AtomLevel
    want = (k(L.gL, L.gR) + k(L.gR, L.gL) + k(L.ga, L.g0)) / math.sqrt(3.0)
    np.testing.assert_allclose(t.T1, want, atol=1e-15)


def test_inert_atom1_levels(params, space):
    # Atom 1 never couples through eL/eR: those basis states sit in the space
    # for layout uniformity.  The static Hamiltonian and every decay channel
    # leave the sector entirely alone; the ground stirring still shuffles
    # atom 2 inside it, but nothing connects the sector to the rest, so it
    # stays dynamically dark from any physical initial state.
    idx = [
        i
        for i, s in enumerate(space.states)
        if s.atom1 in (AtomLevel.eL, AtomLevel.eR)
    ]
    rest = [i for i in range(space.dim) if i not in set(idx)]
    assert idx, "expected the dark sector in the basis"

    h0 = build_H0(params, space).toarray()
    assert np.abs(h0[idx, :]).max() == 0.0
    assert np.abs(h0[:, idx]).max() == 0.0

    h = build_H_full(params, space).toarray()
    assert np.abs(h[np.ix_(idx, rest)]).max() == 0.0
    assert np.abs(h[np.ix_(rest, idx)]).max() == 0.0

    for ch in build_collapse_channels(params, space):
        dense = ch.op.toarray()
        assert np.abs(dense[idx, :]).max() == 0.0
        assert np.abs(dense[:, idx]).max() == 0.0


# -- collapse channels ---------------------------------------------------------


@pytest.mark.parametrize(
    "kappa,gamma,count",
    [(0.0, 0.0, 0), (0.05, 0.0, 4), (0.0, 0.04, 7), (0.05, 0.04, 11)],
)
def test_channel_counts(space, kappa, gamma, count):
    p = ModelParams(Omega=0.01, kappa=kappa, gamma=gamma)
    chans = build_collapse_channels(p, space)
    assert len(chans) == count
    labels = [c.label for c in chans]
    assert labels == [l for l in CHANNEL_LABELS if l in set(labels)]


def test_emission_branching_sums(params, space):
    chans = build_collapse_channels(params, space)
    total = {"gamma1": SparseOperator.zero(space.dim), "gamma2": SparseOperator.zero(space.dim)}
    for ch in chans:
        group = ch.label.split(".")[0]
        if group in total:
            total[group] = total[group] + ch.op.adjoint() @ ch.op
    # three gamma/3 branches from e0; two gamma/2 branches from each of eL, eR
    p_e0 = lift_atom_op(space, 1, AtomLevel.e0, AtomLevel.e0)
    p_e2 = lift_atom_op(space, 2, AtomLevel.eL, AtomLevel.eL) + lift_atom_op(
        space, 2, AtomLevel.eR, AtomLevel.eR
    )
    assert (total["gamma1"] - params.gamma * p_e0).max_abs() <= 1e-14
    assert (total["gamma2"] - params.gamma * p_e2).max_abs() <= 1e-14


def test_cavity_decay_total_rate(params, space):
    chans = [c for c in build_collapse_channels(params, space) if c.label.startswith("kappa")]
    total = SparseOperator.zero(space.dim)
    for ch in chans:
        total = total + ch.op.adjoint() @ ch.op
    n_photons = SparseOperator.zero(space.dim)
    for m in ModeId:
        a = lift_mode_annihilator(space, m)
        n_photons = n_photons + a.adjoint() @ a
    assert (total - params.kappa * n_photons).max_abs() <= 1e-13


def test_dissipator_invariant_under_mode_mixing(params, space, rng):
    """Equal-rate decay of the four local modes equals decay of the mixed modes.

    The delocalized combinations are a unitary reshuffle of the local
    annihilators; a dissipator with one common rate cannot tell the bases
    apart.  This is what lets the channel list use the mixed modes (where the
    effective reduction is diagonal) while the physical loss happens locally.
    """
    root = math.sqrt(params.kappa)
    local = [root * lift_mode_annihilator(space, m) for m in ModeId]
    mixed = [root * c for c in delocalized_modes(space).values()]
    zero_h = SparseOperator.zero(space.dim)
    for _ in range(3):
        rho = random_density(rng, space.dim)
        np.testing.assert_allclose(
            lindblad_rhs(zero_h, local, rho),
            lindblad_rhs(zero_h, mixed, rho),
            atol=1e-12,
        )


def test_mixed_modes_diagonalize_hopping(params, space):
    a = {m: lift_mode_annihilator(space, m) for m in ModeId}
    n_total = SparseOperator.zero(space.dim)
    for m in ModeId:
        n_total = n_total + a[m].adjoint() @ a[m]
    hop = a[ModeId.aL1].adjoint() @ a[ModeId.aL2] + a[ModeId.aR1].adjoint() @ a[ModeId.aR2]
    h_modes = params.delta * n_total + params.J * (hop + hop.adjoint())

    c = delocalized_modes(space)
    want = (
        (params.delta - params.J) * (c["cL1"].adjoint() @ c["cL1"] + c["cR1"].adjoint() @ c["cR1"])
        + (params.delta + params.J) * (c["cL2"].adjoint() @ c["cL2"] + c["cR2"].adjoint() @ c["cR2"])
    )
    assert (h_modes - want).max_abs() <= 1e-12


def test_ground_state_vector(space):
    v = ground_state_vector(space, "gLg0")
    np.testing.assert_array_equal(v, space.ket(AtomLevel.gL, AtomLevel.g0))
    with pytest.raises(ValueError, match="not a ground-manifold state"):
        ground_state_vector(space, "eLg0")
