"""Projection of SABR/LMM parameters onto an uncorrelated swap-rate SABR model.

For a swaption ``(n, m)`` the swap rate is treated as a weighted basket of the
Libors ``L_n..L_m`` with weights frozen at time 0.  This gives time-dependent
swap-rate parameters ``g_X(t)``, ``beta_X(t)``, ``nu_X(t)`` on the tenor intervals
before ``T_n``, which are then averaged to the constants ``(alpha(0), B, nu)``.

Every parameter is piecewise constant on tenor intervals, so all time
integrals below are exact closed forms per interval.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError, PriceAtIntrinsicError
from .model import LmmParams
from .pricers import UncorrelatedSabrParams
from .tenor import MarketCurves, SwapSpec, swap_rate_and_annuity, swap_weights

NU_MAX = 5.0


def phi1(x):
    """``(e^x - 1) / x`` with the removable singularity filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 1.0 + 0.5 * x, np.expm1(x) / np.where(small, 1.0, x))
    return out[()] if out.ndim == 0 else out


def phi2(x):
    """``(e^x - 1 - x) / x^2``; Taylor series near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 0.0)
    series = 0.5 + xs * (1 / 6 + xs * (1 / 24 + xs * (1 / 120 + xs * (1 / 720 + xs / 5040))))
    safe = np.where(small, 1.0, x)
    out = np.where(small, series, (np.expm1(safe) - safe) / (safe * safe))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class TimeDependentSwapSabr:
    """Swap-rate parameters on the intervals ``[T_l, T_{l+1})``, ``l < n``.

    ``degenerate`` marks intervals where ``g_X = 0`` and ``beta_X`` was set to 0.
    """

    knots: np.ndarray
    gX_sq: np.ndarray
    betaX: np.ndarray
    nuX: np.ndarray
    degenerate: np.ndarray

    @property
    def expiry(self) -> float:
        return float(self.knots[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.knots)


def _check(spec: SwapSpec, curves: MarketCurves, params: LmmParams):
    spec.check(curves.tenor)
    if spec.n < 1:
        raise ParameterError("projection needs an expiry index n >= 1 (T_n > 0)")
    if params.tenor.n_periods != curves.tenor.n_periods or not np.allclose(
        params.tenor.dates, curves.tenor.dates
    ):
        raise ParameterError("model and curves are defined on different tenor grids")


def _slices(spec: SwapSpec, params: LmmParams, name: str) -> np.ndarray:
    """``[interval l, libor i]`` block of a parameter for ``l < n``, ``i = n..m``."""
    return getattr(params, name)[spec.n : spec.m + 1, : spec.n].T


def _correlations(spec: SwapSpec, params: LmmParams) -> np.ndarray:
    """Rate correlation blocks, shape ``(n, k, k)``."""
    idx = np.arange(spec.n, spec.m + 1)
    dates = params.tenor.dates[idx]
    dist = np.abs(dates[:, None] - dates[None, :])
    return np.exp(-params.corr_decay[: spec.n, None, None] * dist[None])


def gX_profile(spec: SwapSpec, curves: MarketCurves, params: LmmParams) -> np.ndarray:
    """``g_X^2`` per interval: ``sum_ij v_i v_j g_i g_j rho_ij``."""
    _check(spec, curves, params)
    v = swap_weights(spec, curves.tenor, curves.disc)
    a = _slices(spec, params, "g") * v[None, :]
    return np.einsum("li,lij,lj->l", a, _correlations(spec, params), a)


def betaX_profile(spec: SwapSpec, curves: MarketCurves, params: LmmParams):
    """Skew of the swap rate per interval, matched to the basket slope at the ATM point.

    Returns ``(betaX, degenerate)``; intervals with ``g_X = 0`` get ``beta_X = 0``.
    """
    _check(spec, curves, params)
    v = swap_weights(spec, curves.tenor, curves.disc)
    S0, _ = swap_rate_and_annuity(spec, curves.tenor, curves.fwd, curves.disc)
    L0 = curves.forwards[spec.n : spec.m + 1]
    g = _slices(spec, params, "g")
    beta = _slices(spec, params, "skew")
    a = g * v[None, :]
    rho = _correlations(spec, params)
    ga = np.einsum("lij,li->lj", rho, a)  # sum_i v_i g_i rho_ij
    gx2 = np.einsum("lj,lj->l", a, ga)
    num = np.einsum("lj,lj->l", a * beta / L0[None, :], ga)
    degenerate = gx2 <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        bx = np.where(degenerate, 0.0, S0 * num / (np.where(degenerate, 1.0, gx2) * v.sum()))
    return bx, degenerate


def nuX_profile(spec: SwapSpec, curves: MarketCurves, params: LmmParams) -> np.ndarray:
    """Volatility-weighted blend ``sum_i w_i nu_i`` with ``w_i ~ v_i g_i``."""
    _check(spec, curves, params)
    v = swap_weights(spec, curves.tenor, curves.disc)
    a = _slices(spec, params, "g") * v[None, :]
    nu = _slices(spec, params, "nu")
    tot = a.sum(axis=1)
    plain = nu.mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tot > 0, (a * nu).sum(axis=1) / np.where(tot > 0, tot, 1.0), plain)


def time_dependent_params(spec, curves, params) -> TimeDependentSwapSabr:
    bx, degenerate = betaX_profile(spec, curves, params)
    return TimeDependentSwapSabr(
        knots=curves.tenor.dates[: spec.n + 1].copy(),
        gX_sq=gX_profile(spec, curves, params),
        betaX=bx,
        nuX=nuX_profile(spec, curves, params),
        degenerate=degenerate,
    )


def _vol_integrals(knots, nuX):
    """Cumulative ``N(T_l) = int_0^{T_l} nu_X^2`` at the knots."""
    return np.concatenate([[0.0], np.cumsum(nuX**2 * np.diff(knots))])


def moment_v2(gX_sq, nuX, knots, t: float) -> float:
    """``v^2(t) = exp(N(t)) int_0^t exp(5 N(u)) g_X^2(u) du`` with ``N = int nu_X^2``."""
    knots = np.asarray(knots, dtype=float)
    gX_sq, nuX = np.asarray(gX_sq, dtype=float), np.asarray(nuX, dtype=float)
    if t < 0 or t > knots[-1] * (1 + 1e-14):
        raise ParameterError(f"t = {t} outside [0, {knots[-1]}]")
    lo = knots[:-1]
    h = np.clip(np.minimum(knots[1:], t) - lo, 0.0, None)
    a = nuX**2
    N_lo = _vol_integrals(knots, nuX)[:-1]
    N_t = float(np.sum(a * h))
    inner = np.sum(gX_sq * np.exp(5.0 * N_lo) * h * phi1(5.0 * a * h))
    return float(math.exp(N_t) * inner)


def skew_average(betaX, gX_sq, nuX, knots) -> float:
    """``B = int v^2 g_X^2 beta_X dt / int v^2 g_X^2 dt`` over ``[0, T_n]``.

    On an interval of width ``h`` starting at ``t_l`` with ``a = nu_X^2`` and
    ``G = g_X^2``:

        int_0^h v^2 = e^{N_l} [C_l h phi1(a h) + G e^{5 N_l} h^2 (6 phi2(6 a h) - phi2(a h)) / 5]

    where ``C_l = int_0^{t_l} e^{5N} g_X^2``.
    """
    knots = np.asarray(knots, dtype=float)
    betaX, gX_sq, nuX = (np.asarray(x, dtype=float) for x in (betaX, gX_sq, nuX))
    h = np.diff(knots)
    a = nuX**2
    N = _vol_integrals(knots, nuX)[:-1]
    pieces = gX_sq * np.exp(5.0 * N) * h * phi1(5.0 * a * h)
    C = np.concatenate([[0.0], np.cumsum(pieces)[:-1]])
    ah = a * h
    v2_int = np.exp(N) * (
        C * h * phi1(ah) + gX_sq * np.exp(5.0 * N) * h * h * (6.0 * phi2(6.0 * ah) - phi2(ah)) / 5.0
    )
    weight = gX_sq * v2_int
    den = weight.sum()
    if not den > 0:
        raise ParameterError("skew averaging weight vanishes (all g_X = 0)")
    return float(np.sum(weight * betaX) / den)


def alpha0_sq(spec: SwapSpec, curves: MarketCurves, params: LmmParams) -> float:
    """``alpha(0)^2 = (1/T_n) int_0^{T_n} g_X^2 dt``."""
    gx2 = gX_profile(spec, curves, params)
    knots = curves.tenor.dates[: spec.n + 1]
    return float(np.sum(gx2 * np.diff(knots)) / knots[-1])


def _vol_kernel(params: LmmParams, n: int, indices):
    """Per-interval pieces ``(M, c, h, A)`` over ``[0, T_n)`` for Libors ``indices``.

    ``M[l, i, j] = int_0^{T_l} nu_i nu_j``, ``c = nu_i nu_j`` on interval ``l``
    and ``A = g_i g_j rho_ij`` there.
    """
    idx = np.asarray(indices)
    g = params.g[idx, :n].T
    nu = params.nu[idx, :n].T
    h = np.diff(params.tenor.dates[: n + 1])
    c = nu[:, :, None] * nu[:, None, :]
    M = np.concatenate([np.zeros((1,) + c.shape[1:]), np.cumsum(c * h[:, None, None], axis=0)[:-1]])
    dates = params.tenor.dates[idx]
    rho = np.exp(-params.corr_decay[:n, None, None] * np.abs(dates[:, None] - dates[None, :])[None])
    A = g[:, :, None] * g[:, None, :] * rho
    return M, c, h, A


def libor_covariance(params: LmmParams, n: int, indices) -> np.ndarray:
    """``K_ij = int_0^{T_n} E[alpha_i alpha_j] g_i g_j rho_ij dt`` with ``E[alpha_i alpha_j] = exp(int nu_i nu_j)``."""
    M, c, h, A = _vol_kernel(params, n, indices)
    hh = h[:, None, None]
    return np.sum(A * np.exp(M) * hh * phi1(c * hh), axis=0)


def vol_of_vol_rhs(spec, curves, params) -> float:
    """``sum_ij v_i v_j int_0^{T_n} exp(int_0^t nu_i nu_j) g_i g_j rho_ij dt``."""
    v = swap_weights(spec, curves.tenor, curves.disc)
    return float(v @ libor_covariance(params, spec.n, spec.indices) @ v)


def nu_estimate(
    spec: SwapSpec,
    curves: MarketCurves,
    params: LmmParams,
    mode: str = "exact",
    printed_formula: bool = False,
) -> float:
    """Swap-rate vol-of-vol.

    ``exact`` solves ``alpha(0)^2 T (e^{T nu^2} - 1) / (T nu^2) = RHS``.
    ``expansion`` takes the first-order expansion of both sides; the printed
    variant without the factor 2 is available through ``printed_formula``.
    """
    _check(spec, curves, params)
    T = float(curves.tenor.dates[spec.n])
    a2 = alpha0_sq(spec, curves, params)
    if not a2 > 0:
        raise ParameterError("nu_estimate needs alpha(0)^2 > 0")
    if mode == "expansion":
        v = swap_weights(spec, curves.tenor, curves.disc)
        M, c, h, A = _vol_kernel(params, spec.n, spec.indices)
        hh = h[:, None, None]
        total = float(v @ np.sum(A * (M * hh + 0.5 * c * hh * hh), axis=0) @ v)
        factor = 1.0 if printed_formula else 2.0
        return math.sqrt(max(factor * total / (T * T * a2), 0.0))
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    ratio = vol_of_vol_rhs(spec, curves, params) / (a2 * T)
    if ratio <= 1.0 + 1e-15:
        if ratio < 1.0 - 1e-12:
            warnings.warn(
                f"vol-of-vol moment ratio {ratio:.15g} < 1 has no real root; nu set to 0",
                RuntimeWarning,
                stacklevel=2,
            )
        return 0.0
    x_max = T * NU_MAX**2
    if phi1(x_max) < ratio:
        raise ParameterError(f"nu root not bracketed within (0, {NU_MAX}] at expiry {T}")
    x = brentq(lambda y: float(phi1(y)) - ratio, 0.0, x_max, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return math.sqrt(x / T)


def project_swap_sabr(
    spec: SwapSpec, curves: MarketCurves, params: LmmParams, nu_mode: str = "exact"
) -> UncorrelatedSabrParams:
    """Uncorrelated swap-rate SABR parameters for swaption ``(n, m)``."""
    prof = time_dependent_params(spec, curves, params)
    a2 = float(np.sum(prof.gX_sq * prof.widths) / prof.expiry)
    if not a2 > 0:
        raise PriceAtIntrinsicError(
            f"swaption ({spec.n}, {spec.m}) has zero projected volatility: price at intrinsic"
        )
    B = skew_average(prof.betaX, prof.gX_sq, prof.nuX, prof.knots)
    nu = nu_estimate(spec, curves, params, mode=nu_mode)
    S0, _ = swap_rate_and_annuity(spec, curves.tenor, curves.fwd, curves.disc)
    return UncorrelatedSabrParams(
        S0=S0, alpha0=math.sqrt(a2), B=min(max(B, 0.0), 1.0), nu=nu, expiry=prof.expiry
    )


def coterminal_specs(tenor, last: int | None = None) -> list[SwapSpec]:
    """Swaptions ``(n, last)`` for ``n = 1..last``."""
    last = tenor.last_index if last is None else last
    return [SwapSpec(n, last) for n in range(1, last + 1)]
