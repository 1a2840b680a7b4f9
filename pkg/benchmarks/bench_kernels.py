#!/usr/bin/env python3
"""Time the compiled RK4 kernel against the NumPy reference.

Two workloads bracket the package's real use: the 16-dim ground-manifold
model (many steps, matrices in cache) and the 104-dim full model (fewer
steps, dense products dominate).  Both backends run identical inputs built
from the emission-only scenario's parameters.

Usage: python3 benchmarks/bench_kernels.py [--steps-small N] [--steps-large N] [--repeat R]
"""

import argparse
import time

import numpy as np

from tricav import _kernels_py
from tricav.dynamics import _pack_channels, suggest_step
from tricav.effective import reduce_effective
from tricav.model import build_H_full, build_collapse_channels, ground_state_vector
from tricav.scenarios import FULL_MODEL_STEP, scenario_defaults
from tricav.space import build_state_space

try:
    from tricav import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def fold(h_dense, channel_mats):
    k = h_dense.astype(np.complex128).copy()
    for m in channel_mats:
        k -= 0.5j * (m.conj().T @ m)
    return k


def workloads():
    params = scenario_defaults("fig2").params
    space = build_state_space(max_excitation=1, per_mode_cap=1)

    model = reduce_effective(params, space)
    eff_mats = [ch.op.toarray() for ch in model.channels]
    rho_eff = np.outer(model.ket("gagL"), model.ket("gagL").conj())
    yield (
        "effective 16-dim",
        fold(model.H_eff.toarray(), eff_mats),
        eff_mats,
        rho_eff,
        suggest_step(model.H_eff, model.channels),
    )

    h_full = build_H_full(params, space)
    channels = build_collapse_channels(params, space)
    full_mats = [ch.op.toarray() for ch in channels]
    vec = ground_state_vector(space, "gagL")
    yield (
        "full 104-dim",
        fold(h_full.toarray(), full_mats),
        full_mats,
        np.outer(vec, vec.conj()),
        FULL_MODEL_STEP,
    )


def run(impl, k_fold, mats, rho0, step, n_steps):
    n = k_fold.shape[0]
    packed = _pack_channels(mats)
    obs = np.zeros((0, n), dtype=np.complex128)
    out_obs = np.zeros((2, 0))
    scratch = [np.zeros(2) for _ in range(3)]
    rho = np.ascontiguousarray(rho0).copy()
    start = time.perf_counter()
    ret = impl.run_rk4(
        k_fold, *packed, rho, step, n_steps, n_steps,
        obs, out_obs, scratch[0], scratch[1], scratch[2], 1e-6,
    )
    elapsed = time.perf_counter() - start
    assert ret == 1, f"kernel aborted with {ret}"
    return elapsed, rho


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps-small", type=int, default=40_000,
                        help="steps for the 16-dim workload (default 40000)")
    parser.add_argument("--steps-large", type=int, default=4_000,
                        help="steps for the 104-dim workload (default 4000)")
    parser.add_argument("--repeat", type=int, default=3, help="take the best of R runs")
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if _kernels_cy is not None:
        backends.append(("cython", _kernels_cy))
    else:
        print("note: compiled kernel not importable; timing the reference only")

    print(f"{'workload':<18} {'backend':<8} {'steps':>8} {'seconds':>9} {'steps/s':>10}")
    for name, k_fold, mats, rho0, step in workloads():
        n_steps = args.steps_small if "16" in name else args.steps_large
        times = {}
        states = {}
        for backend_name, impl in backends:
            best = min(
                run(impl, k_fold, mats, rho0, step, n_steps)[0]
                for _ in range(args.repeat)
            )
            times[backend_name] = best
            states[backend_name] = run(impl, k_fold, mats, rho0, step, n_steps)[1]
            print(
                f"{name:<18} {backend_name:<8} {n_steps:>8} {best:>9.3f} "
                f"{n_steps / best:>10.0f}"
            )
        if len(times) == 2:
            drift = np.abs(states["python"] - states["cython"]).max()
            print(
                f"{'':<18} speedup x{times['python'] / times['cython']:.2f}, "
                f"final-state difference {drift:.2e}"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
