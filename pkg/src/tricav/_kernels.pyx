# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled fixed-step RK4 Lindblad kernel.

Mirrors ``tricav._kernels_py.run_rk4`` exactly; that module is the readable
reference for the contract and the folded right-hand side.  The dense product
Kρ goes through BLAS (one zgemm per stage); the compressed jump sandwiches
and the RK4 stage combinations are explicit loops, which beats temporaries at
the dimensions this package cares about (≤ a few hundred).
"""

import numpy as np

from libc.stdint cimport int64_t
from scipy.linalg.cython_blas cimport zgemm

ctypedef double complex zc


cdef inline void _matmul(zc* a, zc* b, zc* c, int n) noexcept nogil:
    # Row-major C = A·B == column-major C^T = B^T·A^T, so swap the operands.
    cdef char no_trans = b'N'
    cdef zc one = 1.0
    cdef zc zero = 0.0
    zgemm(&no_trans, &no_trans, &n, &n, &n, &one, b, &n, a, &n, &zero, c, &n)


cdef void _rhs(
    int n,
    zc* K,
    zc* x,
    zc* out,
    zc* gemm,
    zc* sand,
    int nc,
    zc* s_data,
    int64_t* s_off,
    int64_t* src_data,
    int64_t* src_off,
    int64_t* tgt_data,
    int64_t* tgt_off,
) noexcept nogil:
    cdef Py_ssize_t i, j, c, a, b, q, d, m, k
    cdef zc acc
    cdef zc neg_i = -1j
    cdef zc* S
    cdef int64_t* src
    cdef int64_t* tgt

    _matmul(K, x, gemm, n)
    for i in range(n):
        for j in range(n):
            out[i * n + j] = neg_i * (gemm[i * n + j] - gemm[j * n + i].conjugate())

    for c in range(nc):
        S = s_data + s_off[c]
        src = src_data + src_off[c]
        tgt = tgt_data + tgt_off[c]
        k = src_off[c + 1] - src_off[c]
        m = tgt_off[c + 1] - tgt_off[c]
        for a in range(m):
            for b in range(k):
                acc = 0
                for q in range(k):
                    acc = acc + S[a * k + q] * x[src[q] * n + src[b]]
                sand[a * k + b] = acc
        for a in range(m):
            for d in range(m):
                acc = 0
                for b in range(k):
                    acc = acc + sand[a * k + b] * S[d * k + b].conjugate()
                out[tgt[a] * n + tgt[d]] = out[tgt[a] * n + tgt[d]] + acc


def run_rk4(
    zc[:, ::1] K,
    zc[::1] s_data,
    int64_t[::1] s_off,
    int64_t[::1] src_data,
    int64_t[::1] src_off,
    int64_t[::1] tgt_data,
    int64_t[::1] tgt_off,
    zc[:, ::1] rho,
    double h,
    int64_t n_steps,
    int64_t record_every,
    zc[:, ::1] obs,
    double[:, ::1] out_obs,
    double[::1] out_trace,
    double[::1] out_herm,
    double[::1] out_rhs,
    double trace_tol,
):
    if n_steps % record_every != 0:
        raise ValueError("n_steps must be a multiple of record_every")

    cdef int n = rho.shape[0]
    cdef int nc = s_off.shape[0] - 1
    cdef Py_ssize_t n_obs = obs.shape[0]

    # Empty inputs would make &view[0] ill-defined; give them one slot.
    if s_data.shape[0] == 0:
        s_data = np.zeros(1, dtype=np.complex128)
    if src_data.shape[0] == 0:
        src_data = np.zeros(1, dtype=np.int64)
    if tgt_data.shape[0] == 0:
        tgt_data = np.zeros(1, dtype=np.int64)
    cdef bint have_obs = n_obs > 0
    if not have_obs:
        obs = np.zeros((1, n), dtype=np.complex128)

    cdef Py_ssize_t msize = 1
    cdef Py_ssize_t c, m, k
    for c in range(nc):
        m = tgt_off[c + 1] - tgt_off[c]
        k = src_off[c + 1] - src_off[c]
        if m * k > msize:
            msize = m * k

    k1_arr = np.empty((n, n), dtype=np.complex128)
    kc_arr = np.empty((n, n), dtype=np.complex128)
    tmp_arr = np.empty((n, n), dtype=np.complex128)
    gemm_arr = np.empty((n, n), dtype=np.complex128)
    sand_arr = np.empty(msize, dtype=np.complex128)
    cdef zc[:, ::1] k1v = k1_arr
    cdef zc[:, ::1] kcv = kc_arr
    cdef zc[:, ::1] tmpv = tmp_arr
    cdef zc[:, ::1] gemmv = gemm_arr
    cdef zc[::1] sandv = sand_arr

    cdef zc* Kp = &K[0, 0]
    cdef zc* xp = &rho[0, 0]
    cdef zc* k1p = &k1v[0, 0]
    cdef zc* kcp = &kcv[0, 0]
    cdef zc* tmpp = &tmpv[0, 0]
    cdef zc* gemmp = &gemmv[0, 0]
    cdef zc* sandp = &sandv[0]
    cdef zc* obsp = &obs[0, 0]
    cdef zc* sp = &s_data[0]
    cdef int64_t* sop = &s_off[0]
    cdef int64_t* srcp = &src_data[0]
    cdef int64_t* srcop = &src_off[0]
    cdef int64_t* tgtp = &tgt_data[0]
    cdef int64_t* tgtop = &tgt_off[0]

    cdef Py_ssize_t nn = <Py_ssize_t> n * n
    cdef Py_ssize_t step, i, j, o, r, last
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double drift, rmax, v
    cdef double herm_window = 0.0
    cdef zc trace, acc, row, za, zb
    cdef bint abort = 0

    with nogil:
        last = 0
        r = 0
        while True:
            # --- record sample r (state currently in xp) ---
            trace = 0
            for i in range(n):
                trace = trace + xp[i * n + i]
            drift = abs(trace - 1.0)
            out_trace[r] = drift
            out_herm[r] = herm_window
            herm_window = 0.0
            if have_obs:
                for o in range(n_obs):
                    acc = 0
                    for i in range(n):
                        row = 0
                        for j in range(n):
                            row = row + xp[i * n + j] * obsp[o * n + j]
                        acc = acc + obsp[o * n + i].conjugate() * row
                    out_obs[r, o] = acc.real
            _rhs(n, Kp, xp, k1p, gemmp, sandp, nc, sp, sop, srcp, srcop, tgtp, tgtop)
            rmax = 0.0
            for i in range(nn):
                v = abs(k1p[i])
                if v > rmax:
                    rmax = v
            out_rhs[r] = rmax
            if drift > trace_tol:
                abort = 1
                break
            last = r
            if r * record_every >= n_steps:
                break

            # --- advance record_every RK4 steps ---
            for step in range(record_every):
                _rhs(n, Kp, xp, k1p, gemmp, sandp, nc, sp, sop, srcp, srcop, tgtp, tgtop)
                for i in range(nn):
                    tmpp[i] = xp[i] + h2 * k1p[i]
                _rhs(n, Kp, tmpp, kcp, gemmp, sandp, nc, sp, sop, srcp, srcop, tgtp, tgtop)
                for i in range(nn):
                    k1p[i] = k1p[i] + 2 * kcp[i]
                    tmpp[i] = xp[i] + h2 * kcp[i]
                _rhs(n, Kp, tmpp, kcp, gemmp, sandp, nc, sp, sop, srcp, srcop, tgtp, tgtop)
                for i in range(nn):
                    k1p[i] = k1p[i] + 2 * kcp[i]
                    tmpp[i] = xp[i] + h * kcp[i]
                _rhs(n, Kp, tmpp, kcp, gemmp, sandp, nc, sp, sop, srcp, srcop, tgtp, tgtop)
                for i in range(nn):
                    xp[i] = xp[i] + h6 * (k1p[i] + kcp[i])
                # Project back onto the hermitian subspace (see the reference
                # module: the folded rhs amplifies asymmetry exponentially).
                for i in range(n):
                    v = abs(xp[i * n + i] - xp[i * n + i].conjugate())
                    if v > herm_window:
                        herm_window = v
                    xp[i * n + i] = xp[i * n + i].real
                    for j in range(i + 1, n):
                        za = xp[i * n + j]
                        zb = xp[j * n + i].conjugate()
                        v = abs(za - zb)
                        if v > herm_window:
                            herm_window = v
                        za = 0.5 * (za + zb)
                        xp[i * n + j] = za
                        xp[j * n + i] = za.conjugate()
            r = r + 1

    if abort:
        return -r - 1
    return last
