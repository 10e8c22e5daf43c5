"""Vectorised adaptive Gauss-Kronrod (10/21) and Gauss-Legendre helpers."""

from __future__ import annotations

import math

import numpy as np

from .errors import QuadratureError

# QUADPACK qk21 abscissae (positive half, descending) and weights
_XK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES_21 = np.concatenate([-_XK[:-1], _XK[::-1]])
WEIGHTS_K21 = np.concatenate([_WK[:-1], _WK[::-1]])
WEIGHTS_G10 = np.zeros(21)
# Gauss nodes sit at odd positions of the Kronrod list
WEIGHTS_G10[1:10:2] = _WG
WEIGHTS_G10[19:10:-2] = _WG

_EPS = np.finfo(float).eps


def _gk21_batch(f, a, b):
    """K21 estimate and QUADPACK-style error for each interval ``[a_i, b_i]``."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * NODES_21[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    res_k = half * (fx @ WEIGHTS_K21)
    res_g = half * (fx @ WEIGHTS_G10)
    res_abs = np.abs(half) * (np.abs(fx) @ WEIGHTS_K21)
    mean = res_k / np.where(half != 0, 2.0 * half, 1.0)
    res_asc = np.abs(half) * (np.abs(fx - mean[:, None]) @ WEIGHTS_K21)
    err = np.abs(res_k - res_g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            (res_asc != 0) & (err != 0),
            res_asc * np.minimum(1.0, (200.0 * err / res_asc) ** 1.5),
            err,
        )
    floor = 50.0 * _EPS * res_abs
    err = np.where(res_abs > np.finfo(float).tiny / (50 * _EPS), np.maximum(scaled, floor), scaled)
    return res_k, err


def adaptive_gk21(f, a, b, rtol=1e-9, atol=0.0, max_intervals=4000, initial=1):
    """Integrate a vectorised ``f`` over ``[a, b]``.

    Each round bisects the intervals carrying the most error, evaluating all
    new nodes in one call.  Returns ``(value, error_estimate)``.
    """
    if b == a:
        return 0.0, 0.0
    edges = np.linspace(a, b, initial + 1)
    lo, hi = edges[:-1], edges[1:]
    val, err = _gk21_batch(f, lo, hi)
    while True:
        total = math.fsum(val)
        tol = max(atol, rtol * abs(total))
        err_sum = err.sum()
        if err_sum <= tol:
            return total, err_sum
        if lo.size >= max_intervals:
            raise QuadratureError(
                f"adaptive quadrature stopped at {lo.size} intervals with error "
                f"{err_sum:.3g} > tolerance {tol:.3g}",
                achieved=err_sum / max(abs(total), np.finfo(float).tiny),
            )
        # split the largest-error intervals until the untouched ones fit the budget
        order = np.argsort(err)[::-1]
        cum = err_sum - np.cumsum(err[order])
        n_split = int(np.searchsorted(-cum, -0.5 * tol)) + 1
        n_split = min(max(n_split, 1), lo.size, max_intervals - lo.size)
        split = order[:n_split]
        keep = np.ones(lo.size, dtype=bool)
        keep[split] = False
        mids = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mids])
        new_hi = np.concatenate([mids, hi[split]])
        new_val, new_err = _gk21_batch(f, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], new_val])
        err = np.concatenate([err[keep], new_err])


def gauss_legendre_unit(n: int):
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
