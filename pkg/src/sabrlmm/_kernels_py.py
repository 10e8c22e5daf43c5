"""Pure numpy versions of the hot kernels (fallback when the extension is absent)."""

from __future__ import annotations

import math

import numpy as np

_LN2 = math.log(2.0)
# rates below this are absorbed at zero before sigma / L can overflow
ABSORB = 1e-100


def _log_sinh(x):
    # accurate for tiny and huge arguments alike
    return x - _LN2 + np.log(-np.expm1(-2.0 * x))


def g_cutoff(t, s):
    """Upper limit in ``u`` beyond which the Gaussian factor is below 1e-16 of its peak."""
    return 0.5 * t + np.sqrt(np.maximum(s - 0.5 * t, 0.0) ** 2 + 74.0 * t)


def akrs_g(t, s, nodes, weights):
    """``G(t, s)`` on a fixed Gauss-Legendre rule (``nodes``/``weights`` on [0, 1]).

    The inner integral runs over ``w`` with ``u = s + w^2``; the integrand is
    assembled in log space and rescaled by its maximum before summation.
    """
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    w_max = np.sqrt(g_cutoff(t, flat) - flat)
    w = w_max[:, None] * nodes[None, :]
    half = 0.5 * w * w
    u = flat[:, None] + w * w
    log_f = (
        np.log(2.0 * w * u)
        - u * u / (2.0 * t)
        + 0.5 * (_LN2 + _log_sinh(flat[:, None] + half) + _log_sinh(half))
    )
    peak = log_f.max(axis=1)
    total = np.exp(log_f - peak[:, None]) @ weights
    log_pref = 1.5 * _LN2 - t / 8.0 - math.log(t) - 0.5 * math.log(2.0 * math.pi * t)
    out = np.exp(log_pref + peak + np.log(w_max * total))
    return out.reshape(s.shape)


def evolve_paths(L0, g, nu, beta, fac, rho, chain, delta, sub, dts, kind, eps, z, src, sign,
                 n_stop, out_L, out_A, record):
    """Log-Euler evolution of a block of paths under the terminal measure.

    Parameter blocks are indexed ``[interval l, libor i]``; ``fac[l]`` and
    ``rho[l]`` are full ``(N+1, N+1)`` matrices of which only the alive block
    ``i, j > l`` is read.  ``chain[l, i] = rho[l, i, i-1]`` lets a kernel use
    the O(N) recursions of an exponential correlation; this dense version
    ignores it.  Normals ``z[src[p]] * sign[p]`` drive path ``p``; the
    last column is the shared volatility driver.  Snapshots at tenor dates go
    to ``out_L``/``out_A``; ``record`` (if non-empty) receives every step.
    Returns the index of the first path with a non-finite state, or -1.
    """
    n_lib = L0.size
    P = src.size
    L = np.tile(L0, (P, 1))
    A = np.ones((P, n_lib))
    out_L[:, 0] = L
    out_A[:, 0] = A
    keep = record.shape[0] > 0
    if keep:
        record[:, 0, :n_lib] = L
        record[:, 0, n_lib:] = A
    sg = sign[:, None]
    step = 0
    for l in range(n_stop):
        a = slice(l + 1, n_lib)
        L0a, da = L0[a], delta[a]
        ga, na, ba = g[l, a], nu[l, a], beta[l, a]
        fl = fac[l, a, a]
        upper = np.triu(rho[l, a, a], k=1)
        dt = dts[l]
        sq = math.sqrt(dt)
        for _ in range(sub[l]):
            La = L[:, a]
            if kind == 0:
                ph = (np.maximum(La, eps * L0a) / L0a) ** ba
            else:
                ph = np.maximum(L0a + ba * (La - L0a), eps * L0a) / L0a
            live = La > 0
            sig = np.where(live, A[:, a] * ga * ph, 0.0)
            xd = da * sig / (1.0 + da * La)
            zs = z[src, step]
            w = (zs[:, a] @ fl.T) * sg
            mu = -sig * (xd @ upper.T)
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(live, sig / np.where(live, La, 1.0), 0.0)
                expo = np.where(live, (mu / np.where(live, La, 1.0) - 0.5 * r * r) * dt + r * sq * w, 0.0)
            Lnew = La * np.exp(expo)
            L[:, a] = np.where(Lnew < ABSORB, 0.0, Lnew)
            zv = zs[:, n_lib] * sign
            A[:, a] *= np.exp(na[None, :] * sq * zv[:, None] - 0.5 * na * na * dt)
            step += 1
            bad = ~(np.isfinite(L[:, a]).all(axis=1) & np.isfinite(A[:, a]).all(axis=1))
            if bad.any():
                return int(np.argmax(bad))
            if keep:
                record[:, step, :n_lib] = L
                record[:, step, n_lib:] = A
        out_L[:, l + 1] = L
        out_A[:, l + 1] = A
    return -1
