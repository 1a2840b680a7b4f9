"""Both RK4 kernels against a from-scratch dense oracle, and against each other.

The oracle integrates the plain textbook right-hand side with its own RK4
loop — no folding, no compression, no in-place tricks — so any disagreement
points at the kernel, not at a shared formula.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from tricav import _kernels_py
from tricav.dynamics import _pack_channels

try:
    from tricav import _kernels as _kernels_cy
except ImportError:  # pragma: no cover - environment without the extension
    _kernels_cy = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _kernels_cy is not None:
    BACKENDS.append(pytest.param(_kernels_cy, id="cython"))


def random_model(rng, n=6, n_channels=2):
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = 0.5 * (h + h.conj().T)
    ls = []
    for _ in range(n_channels):
        l = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        # keep a couple of structural zeros so the compressed path is exercised
        l[:, rng.integers(n)] = 0.0
        l[rng.integers(n), :] = 0.0
        ls.append(0.4 * l)
    rho = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = rho @ rho.conj().T
    rho /= np.trace(rho).real
    return h, ls, rho


def textbook_rhs(h, ls, rho):
    out = -1j * (h @ rho - rho @ h)
    for l in ls:
        ll = l.conj().T @ l
        out += l @ rho @ l.conj().T - 0.5 * (ll @ rho + rho @ ll)
    return out


def oracle_rk4(h, ls, rho, step, n_steps):
    rho = rho.copy()
    for _ in range(n_steps):
        k1 = textbook_rhs(h, ls, rho)
        k2 = textbook_rhs(h, ls, rho + 0.5 * step * k1)
        k3 = textbook_rhs(h, ls, rho + 0.5 * step * k2)
        k4 = textbook_rhs(h, ls, rho + step * k3)
        rho = rho + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def call_kernel(impl, h, ls, rho, step, n_steps, record_every, obs=None, trace_tol=1e-6):
    n = h.shape[0]
    k_fold = h.astype(np.complex128).copy()
    for l in ls:
        k_fold -= 0.5j * (l.conj().T @ l)
    packed = _pack_channels([np.asarray(l, dtype=np.complex128) for l in ls])
    if obs is None:
        obs = np.zeros((0, n), dtype=np.complex128)
    n_samples = n_steps // record_every + 1
    out_obs = np.zeros((n_samples, obs.shape[0]))
    out_trace = np.zeros(n_samples)
    out_herm = np.zeros(n_samples)
    out_rhs = np.zeros(n_samples)
    state = np.ascontiguousarray(rho, dtype=np.complex128).copy()
    ret = impl.run_rk4(
        k_fold, *packed, state, step, n_steps, record_every,
        obs, out_obs, out_trace, out_herm, out_rhs, trace_tol,
    )
    return ret, state, out_obs, out_trace, out_herm, out_rhs


@pytest.mark.parametrize("impl", BACKENDS)
def test_kernel_matches_textbook_oracle(impl, rng):
    h, ls, rho0 = random_model(rng)
    step, n_steps = 0.01, 60
    ret, state, out_obs, out_trace, out_herm, _ = call_kernel(
        impl, h, ls, rho0, step, n_steps, record_every=3,
        obs=np.eye(6, dtype=np.complex128)[:2],
    )
    assert ret == n_steps // 3
    want = oracle_rk4(h, ls, rho0, step, n_steps)
    np.testing.assert_allclose(state, want, atol=1e-12)
    # recorded projector expectations at the final sample
    assert out_obs[-1, 0] == pytest.approx(want[0, 0].real, abs=1e-12)
    assert out_obs[-1, 1] == pytest.approx(want[1, 1].real, abs=1e-12)
    assert out_trace.max() < 1e-10
    assert out_herm.max() < 1e-12


@pytest.mark.parametrize("impl", BACKENDS)
def test_kernel_output_exactly_hermitian(impl, rng):
    h, ls, rho0 = random_model(rng, n=8, n_channels=3)
    _, state, *_ = call_kernel(impl, h, ls, rho0, 0.02, 40, 40)
    assert np.array_equal(state, state.conj().T)


@pytest.mark.parametrize("impl", BACKENDS)
def test_kernel_handles_empty_channel_list(impl, rng):
    h, _, rho0 = random_model(rng, n_channels=0)
    ret, state, *_ = call_kernel(impl, h, [], rho0, 0.01, 20, 20)
    assert ret == 1
    want = oracle_rk4(h, [], rho0, 0.01, 20)
    np.testing.assert_allclose(state, want, atol=1e-12)


@pytest.mark.skipif(_kernels_cy is None, reason="compiled kernel not built")
def test_backends_agree(rng):
    h, ls, rho0 = random_model(rng, n=10, n_channels=3)
    _, s_py, obs_py, tr_py, *_ = call_kernel(
        _kernels_py, h, ls, rho0, 0.02, 90, 9, obs=np.eye(10, dtype=np.complex128)[:3]
    )
    _, s_cy, obs_cy, tr_cy, *_ = call_kernel(
        _kernels_cy, h, ls, rho0, 0.02, 90, 9, obs=np.eye(10, dtype=np.complex128)[:3]
    )
    np.testing.assert_allclose(s_cy, s_py, atol=1e-13)
    np.testing.assert_allclose(obs_cy, obs_py, atol=1e-13)
    np.testing.assert_allclose(tr_cy, tr_py, atol=1e-13)


@pytest.mark.parametrize("impl", BACKENDS)
def test_trace_abort_return_code(impl, rng):
    # A pure-gain "channel" with no matching damping in K inflates the trace;
    # the kernel must stop at the first record outside the window and report
    # its index as -(record + 1).
    n = 4
    h = np.zeros((n, n), dtype=np.complex128)
    gain = [1.05 * np.eye(n, dtype=np.complex128)]
    rho0 = np.eye(n, dtype=np.complex128) / n
    ret, _, _, out_trace, _, _ = call_kernel(
        impl, h, [], rho0, 0.05, 100, 10, trace_tol=1e-6
    )
    assert ret == 10  # control: no channels, nothing drifts

    k_fold = h  # deliberately NOT folding the gain channel
    packed = _pack_channels(gain)
    out = [np.zeros(11) for _ in range(3)]
    out_obs = np.zeros((11, 0))
    state = rho0.copy()
    ret = impl.run_rk4(
        k_fold, *packed, state, 0.05, 100, 10,
        np.zeros((0, n), dtype=np.complex128), out_obs, out[0], out[1], out[2], 1e-6,
    )
    assert ret < 0
    bad = -ret - 1
    assert 1 <= bad <= 10
    assert out[0][bad] > 1e-6  # the offending trace drift was recorded


@pytest.mark.parametrize("impl", BACKENDS)
def test_rejects_partial_record_window(impl, rng):
    h, ls, rho0 = random_model(rng)
    with pytest.raises(ValueError):
        call_kernel(impl, h, ls, rho0, 0.01, 10, 3)


def test_pack_channels_drops_structural_zeros():
    mats = [np.zeros((4, 4), dtype=np.complex128)]
    m = np.zeros((4, 4), dtype=np.complex128)
    m[1, 2] = 3.0
    mats.append(m)
    s_data, s_off, src, src_off, tgt, tgt_off = _pack_channels(mats)
    assert len(s_off) == 2  # one surviving channel
    assert list(src) == [2] and list(tgt) == [1]
    assert s_data.tolist() == [3.0]


# -- backend selection ---------------------------------------------------------


def run_probe(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("TRICAV_KERNEL", None)
    else:
        env["TRICAV_KERNEL"] = env_value
    return subprocess.run(
        [sys.executable, "-c", "from tricav.kernels import backend; print(backend())"],
        capture_output=True,
        text=True,
        env=env,
    )


def test_backend_forced_python():
    probe = run_probe("python")
    assert probe.returncode == 0
    assert probe.stdout.strip() == "python"


@pytest.mark.skipif(_kernels_cy is None, reason="compiled kernel not built")
def test_backend_forced_cython():
    probe = run_probe("cython")
    assert probe.returncode == 0
    assert probe.stdout.strip() == "cython"


def test_backend_rejects_unknown_value():
    probe = run_probe("fortran")
    assert probe.returncode != 0
    assert "TRICAV_KERNEL" in probe.stderr


def test_default_prefers_extension():
    probe = run_probe(None)
    expected = "python" if _kernels_cy is None else "cython"
    assert probe.stdout.strip() == expected
