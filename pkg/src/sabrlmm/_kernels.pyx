# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; same signatures as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, expm1, fmax

cnp.import_array()

cdef double LN2 = 0.6931471805599453
cdef double LN_2PI = 1.8378770664093453
# rates below this are absorbed at zero before sigma / L can overflow
cdef double ABSORB = 1e-100


cdef inline double _log_sinh(double x) noexcept nogil:
    return x - LN2 + log(-expm1(-2.0 * x))


def akrs_g(double t, s, const double[::1] nodes, const double[::1] weights):
    """``G(t, s)`` on a fixed Gauss-Legendre rule, see ``_kernels_py.akrs_g``."""
    s_arr = np.ascontiguousarray(s, dtype=np.float64)
    cdef const double[::1] sv = s_arr.ravel()
    out_arr = np.empty(sv.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n = sv.shape[0], m = nodes.shape[0], i, k
    cdef double si, w_max, w, half, u, lf, peak, total, d
    cdef double log_pref = 1.5 * LN2 - t / 8.0 - log(t) - 0.5 * (LN_2PI + log(t))
    cdef double[::1] buf = np.empty(m, dtype=np.float64)
    with nogil:
        for i in range(n):
            si = sv[i]
            d = fmax(si - 0.5 * t, 0.0)
            w_max = sqrt(0.5 * t + sqrt(d * d + 74.0 * t) - si)
            peak = -1e308
            for k in range(m):
                w = w_max * nodes[k]
                half = 0.5 * w * w
                u = si + w * w
                # log(2 w u) + log sqrt(2 sinh(s + w^2/2) sinh(w^2/2)) with a single log
                lf = (log(2.0 * w * u * sqrt(expm1(-2.0 * (si + half)) * expm1(-2.0 * half)))
                      - u * u / (2.0 * t) + 0.5 * (si + 2.0 * half - LN2))
                buf[k] = lf
                if lf > peak:
                    peak = lf
            total = 0.0
            for k in range(m):
                total += weights[k] * exp(buf[k] - peak)
            out[i] = exp(log_pref + peak + log(w_max * total))
    return out_arr.reshape(np.shape(s))


from libc.math cimport pow, isfinite


def evolve_paths(const double[::1] L0, const double[:, ::1] g, const double[:, ::1] nu,
                 const double[:, ::1] beta, const double[:, :, ::1] fac,
                 const double[:, :, ::1] rho, const double[:, ::1] chain,
                 const double[::1] delta,
                 const long[::1] sub, const double[::1] dts, int kind, double eps,
                 const double[:, :, ::1] z, const long[::1] src, const double[::1] sign,
                 int n_stop, double[:, :, ::1] out_L, double[:, :, ::1] out_A,
                 double[:, :, ::1] record):
    """Compiled path loop; see ``_kernels_py.evolve_paths`` for the contract.

    With a non-empty ``chain`` the correlation is taken to be exponential in
    the reset dates, so ``rho_ij = prod_{k=j+1..i} chain_k`` for ``j < i``.
    The Cholesky factor is then the recursion ``W_i = a_i W_{i-1} + b_i z_i``
    and the drift sum a backward recursion, both O(N) per step.
    """
    cdef Py_ssize_t n_lib = L0.shape[0], P = src.shape[0]
    cdef Py_ssize_t p, l, k, i, j, step, sp
    cdef bint keep = record.shape[0] > 0
    cdef bint markov = chain.shape[0] > 0
    cdef double[::1] L = np.empty(n_lib)
    cdef double[::1] A = np.empty(n_lib)
    cdef double[::1] sig = np.empty(n_lib)
    cdef double[::1] xd = np.empty(n_lib)
    cdef double[::1] wv = np.empty(n_lib)
    cdef double[::1] sv = np.empty(n_lib)
    cdef double dt, sq, sg, ph, b, x, w, s, mu, r, zv, nv, nv_prev, growth
    cdef int bad = -1
    with nogil:
        for p in range(P):
            sp = src[p]
            sg = sign[p]
            for i in range(n_lib):
                L[i] = L0[i]
                A[i] = 1.0
                out_L[p, 0, i] = L0[i]
                out_A[p, 0, i] = 1.0
                if keep:
                    record[p, 0, i] = L0[i]
                    record[p, 0, n_lib + i] = 1.0
            step = 0
            for l in range(n_stop):
                dt = dts[l]
                sq = sqrt(dt)
                for k in range(sub[l]):
                    for i in range(l + 1, n_lib):
                        if L[i] > 0:
                            b = beta[l, i]
                            if kind == 0:
                                x = L[i] if L[i] > eps * L0[i] else eps * L0[i]
                                ph = pow(x / L0[i], b)
                            else:
                                ph = L0[i] + b * (L[i] - L0[i])
                                if ph < eps * L0[i]:
                                    ph = eps * L0[i]
                                ph = ph / L0[i]
                            sig[i] = A[i] * g[l, i] * ph
                        else:
                            sig[i] = 0.0
                        xd[i] = delta[i] * sig[i] / (1.0 + delta[i] * L[i])
                    if markov:
                        wv[l + 1] = z[sp, step, l + 1]
                        for i in range(l + 2, n_lib):
                            wv[i] = chain[l, i] * wv[i - 1] + fac[l, i, i] * z[sp, step, i]
                        sv[n_lib - 1] = 0.0
                        for i in range(n_lib - 2, l, -1):
                            sv[i] = chain[l, i + 1] * (xd[i + 1] + sv[i + 1])
                    for i in range(l + 1, n_lib):
                        if L[i] <= 0:
                            continue
                        if markov:
                            w = wv[i]
                            s = sv[i]
                        else:
                            w = 0.0
                            for j in range(l + 1, i + 1):
                                w = w + fac[l, i, j] * z[sp, step, j]
                            s = 0.0
                            for j in range(i + 1, n_lib):
                                s = s + rho[l, i, j] * xd[j]
                        w = w * sg
                        mu = -sig[i] * s
                        r = sig[i] / L[i]
                        L[i] = L[i] * exp((mu / L[i] - 0.5 * r * r) * dt + r * sq * w)
                        if L[i] < ABSORB:
                            L[i] = 0.0
                    zv = z[sp, step, n_lib] * sg
                    nv_prev = -1.0
                    for i in range(l + 1, n_lib):
                        nv = nu[l, i]
                        if nv != nv_prev:
                            # one exp per distinct nu; neighbours usually share it
                            growth = exp(nv * sq * zv - 0.5 * nv * nv * dt)
                            nv_prev = nv
                        A[i] = A[i] * growth
                        if not (isfinite(L[i]) and isfinite(A[i])):
                            bad = <int>p
                    step += 1
                    if bad >= 0:
                        break
                    if keep:
                        for i in range(n_lib):
                            record[p, step, i] = L[i]
                            record[p, step, n_lib + i] = A[i]
                if bad >= 0:
                    break
                for i in range(n_lib):
                    out_L[p, l + 1, i] = L[i]
                    out_A[p, l + 1, i] = A[i]
            if bad >= 0:
                break
    return bad
