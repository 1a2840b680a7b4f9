"""Reference NumPy implementation of the fixed-step RK4 Lindblad kernel.

This module defines the kernel contract; the compiled extension in
``_kernels.pyx`` mirrors it operation for operation.

The right-hand side is evaluated in folded form: with K = H − (i/2)ΣⱼLʲ†Lʲ
already absorbed into the dense matrix ``K`` by the caller,

    rhs(ρ) = −i(Kρ − (Kρ)†) + Σⱼ Mʲ ρ Mʲ†,

valid for Hermitian ρ.  Each jump operator is passed compressed: the dense
block S = M[tgt][:, src] over its nonzero target and source index sets, so a
sandwich costs O(m·k·(m+k)) instead of O(n³).

The folded form is cheap (one matrix product per stage) but has a sharp
edge: on the antihermitian complement it reduces to Ḃ = ΣⱼMʲBMʲ†, a pure
gain with no anticommutator damping, so antihermitian rounding noise grows
exponentially at the dissipation rate.  Since the exact flow preserves
hermiticity, the kernel re-hermitizes ρ after every step; the largest
asymmetry discarded between two records is reported per sample as the
hermiticity diagnostic (it stays near machine noise unless something is
genuinely wrong).

``run_rk4`` advances ``rho`` in place for ``n_steps`` steps of size ``h``,
recording diagnostics and observable expectations every ``record_every``
steps (including step 0).  It returns the index of the last record written;
a negative value −(r+1) signals that the trace left the tolerance window at
record r, with diagnostics for r already stored.
"""

from __future__ import annotations

import numpy as np


def run_rk4(
    K: np.ndarray,
    s_data: np.ndarray,
    s_off: np.ndarray,
    src_data: np.ndarray,
    src_off: np.ndarray,
    tgt_data: np.ndarray,
    tgt_off: np.ndarray,
    rho: np.ndarray,
    h: float,
    n_steps: int,
    record_every: int,
    obs: np.ndarray,
    out_obs: np.ndarray,
    out_trace: np.ndarray,
    out_herm: np.ndarray,
    out_rhs: np.ndarray,
    trace_tol: float,
) -> int:
    if n_steps % record_every != 0:
        raise ValueError("n_steps must be a multiple of record_every")
    n = rho.shape[0]
    n_obs = obs.shape[0]

    chans = []
    for c in range(len(s_off) - 1):
        src = src_data[src_off[c] : src_off[c + 1]]
        tgt = tgt_data[tgt_off[c] : tgt_off[c + 1]]
        m, k = len(tgt), len(src)
        s = s_data[s_off[c] : s_off[c] + m * k].reshape(m, k)
        chans.append((s, s.conj().T.copy(), np.ix_(src, src), np.ix_(tgt, tgt)))

    gemm = np.empty_like(rho)

    def rhs(x: np.ndarray, out: np.ndarray) -> None:
        np.matmul(K, x, out=gemm)
        np.conjugate(gemm.T, out=out)
        np.subtract(gemm, out, out=out)
        out *= -1j
        for s, s_h, ix_src, ix_tgt in chans:
            out[ix_tgt] += s @ x[ix_src] @ s_h

    k1 = np.empty_like(rho)
    kc = np.empty_like(rho)
    tmp = np.empty_like(rho)
    herm_window = 0.0

    def record(r: int) -> bool:
        nonlocal herm_window
        out_trace[r] = abs(np.trace(rho) - 1.0)
        out_herm[r] = herm_window
        herm_window = 0.0
        for o in range(n_obs):
            v = obs[o]
            out_obs[r, o] = (v.conj() @ (rho @ v)).real
        rhs(rho, k1)
        out_rhs[r] = np.abs(k1).max()
        return out_trace[r] <= trace_tol

    if not record(0):
        return -1
    last = 0
    for step in range(1, n_steps + 1):
        rhs(rho, k1)
        np.multiply(k1, 0.5 * h, out=tmp)
        tmp += rho
        rhs(tmp, kc)
        k1 += kc
        k1 += kc
        np.multiply(kc, 0.5 * h, out=tmp)
        tmp += rho
        rhs(tmp, kc)
        k1 += kc
        k1 += kc
        np.multiply(kc, h, out=tmp)
        tmp += rho
        rhs(tmp, kc)
        k1 += kc
        k1 *= h / 6.0
        rho += k1
        np.conjugate(rho.T, out=tmp)
        asym = float(np.abs(rho - tmp).max())
        if asym > herm_window:
            herm_window = asym
        rho += tmp
        rho *= 0.5
        if step % record_every == 0:
            last = step // record_every
            if not record(last):
                return -last - 1
    return last
