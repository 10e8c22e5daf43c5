"""Calibration: Hagan-to-uncorrelated SABR conversion, co-terminal bootstrap and
ATM spread-option correlation fit."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .akrs import akrs_implied_vol
from .cms import SpreadSpec, spread_atm_variance
from .errors import CalibrationError, ParameterError, SabrLmmError
from .model import LmmParams, LocalVolKind
from .pricers import HaganSabrParams, UncorrelatedSabrParams, hagan_implied_vol
from .projection import alpha0_sq, nu_estimate, project_swap_sabr, skew_average, time_dependent_params
from .tenor import MarketCurves, SwapSpec, swap_rate_and_annuity

# --------------------------------------------------------------------------- uncorrelated fit


@dataclass(frozen=True)
class SabrFit:
    params: UncorrelatedSabrParams
    rms: float  # vol points
    history: tuple  # best objective after each optimizer iteration
    warning: str | None = None


def default_strike_grid(F: float, count: int = 9) -> np.ndarray:
    return F * np.geomspace(0.5, 2.0, count)


def fit_uncorrelated_sabr(
    h: HaganSabrParams,
    F: float,
    T: float,
    strike_grid=None,
    rms_cap: float = 0.5,
) -> SabrFit:
    """Uncorrelated SABR whose exact smile matches a Hagan smile in least squares.

    Nelder-Mead with bounds from the Hagan parameters (alpha converted to rate
    normalisation).  The objective is the sum of squared vol differences in
    vol points; ``rms_cap`` (vol points) triggers a warning when exceeded.
    """
    strikes = default_strike_grid(F) if strike_grid is None else np.asarray(strike_grid, float)
    if strikes.size < 5:
        raise ParameterError("need at least 5 strikes for the SABR fit")
    target = np.array([hagan_implied_vol(h, F, K, T) for K in strikes])

    alpha_rate = h.alpha_std * F**h.beta
    cache = {}

    def smile(x):
        p = UncorrelatedSabrParams(F, x[0] * alpha_rate, x[1], x[2], T)
        return np.array([akrs_implied_vol(p, K) for K in strikes])

    # x = (alpha0 / alpha_start, B, nu): every coordinate is of order one
    def objective(x):
        key = tuple(float(v) for v in x)
        if key not in cache:
            try:
                cache[key] = float(np.sum((100.0 * (smile(x) - target)) ** 2))
            except SabrLmmError:
                cache[key] = 1e6
        return cache[key]

    # rho's contribution to the ATM skew slope moved into B: B = beta + rho nu / sigma_atm
    sigma_atm = h.alpha_std * F ** (h.beta - 1.0)
    b_start = min(max(h.beta + h.rho * h.nu / sigma_atm, 0.0), 0.99)
    starts = [np.array([1.0, min(h.beta, 0.99), h.nu])]
    if abs(h.rho) > 0 and h.nu > 0:
        starts.append(np.array([1.0, b_start, h.nu]))
    bounds = [(1e-6, 10.0), (0.0, 0.995), (0.0, 5.0)]
    best, history = None, []
    for x0 in starts:
        trace = [objective(x0)]

        def record(xk):
            trace.append(min(trace[-1], objective(xk)))

        res = minimize(
            objective, x0, method="Nelder-Mead", bounds=bounds, callback=record,
            options={"fatol": 1e-8, "xatol": 1e-8, "maxiter": 4000, "adaptive": True},
        )
        if best is None or res.fun < best.fun:
            best, history = res, trace
    x = best.x
    p = UncorrelatedSabrParams(F, float(x[0] * alpha_rate), float(x[1]), float(x[2]), T)
    rms = math.sqrt(best.fun / strikes.size)
    msg = None
    if rms > rms_cap:
        msg = f"fit RMS {rms:.3f} vol points exceeds the cap {rms_cap}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return SabrFit(p, rms, tuple(history), msg)


# --------------------------------------------------------------------------- co-terminal


@dataclass(frozen=True)
class CoterminalTargets:
    """Uncorrelated-SABR targets of the swaptions ``(n, last)``, ``n = 1..last``.

    Entry ``k`` belongs to expiry index ``n = k + 1``; alpha is in rate normalisation.
    """

    alpha0: np.ndarray
    beta: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        arrs = [np.array(x, dtype=float) for x in (self.alpha0, self.beta, self.nu)]
        if len({a.size for a in arrs}) != 1 or arrs[0].ndim != 1:
            raise ParameterError("alpha0, beta and nu targets must be 1-d of equal length")
        if np.any(arrs[0] < 0) or np.any((arrs[1] < 0) | (arrs[1] > 1)) or np.any(arrs[2] < 0):
            raise ParameterError("targets need alpha0 >= 0, beta in [0, 1], nu >= 0")
        for name, a in zip(("alpha0", "beta", "nu"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def last(self) -> int:
        return self.alpha0.size

    @classmethod
    def from_model(cls, curves: MarketCurves, params: LmmParams, last: int | None = None):
        last = curves.tenor.last_index if last is None else last
        proj = [project_swap_sabr(SwapSpec(n, last), curves, params) for n in range(1, last + 1)]
        return cls([p.alpha0 for p in proj], [p.B for p in proj], [p.nu for p in proj])


def _bracket_root(fun, lo, hi, what, n, T, grow=True, max_hi=None):
    f_lo = fun(lo)
    if f_lo > 0:
        raise CalibrationError(
            f"expiry index {n} (T={T:g}): {what} target below the attainable minimum "
            f"(shortfall {f_lo:.6g} at the lower bound {lo:g})"
        )
    f_hi = fun(hi)
    while f_hi < 0 and grow and (max_hi is None or hi < max_hi):
        hi = hi * 2.0 if max_hi is None else min(hi * 2.0, max_hi)
        f_hi = fun(hi)
    if f_hi < 0:
        raise CalibrationError(
            f"expiry index {n} (T={T:g}): {what} target above the attainable maximum "
            f"(excess {-f_hi:.6g} at the upper bound {hi:g})"
        )
    if f_lo == 0:
        return lo
    return brentq(fun, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def calibrate_coterminal(
    targets: CoterminalTargets,
    curves: MarketCurves,
    corr_decay,
    local_vol_kind=LocalVolKind.CEV,
    sweeps: int = 1,
) -> LmmParams:
    """Time-constant ``g_i``, ``nu_i``, ``beta_i`` reproducing co-terminal swaption targets.

    Backward over expiries ``n = last..1``: ``g_n`` from ``alpha(0)``, then
    ``nu_n`` from the exact vol-of-vol equation, then ``beta_n`` from the skew
    average.  Libors outside ``1..last`` keep zero volatility.
    """
    tenor = curves.tenor
    last = targets.last
    if last > tenor.last_index:
        raise ParameterError(f"{last} targets exceed the {tenor.last_index} co-terminal expiries")
    n_lib = tenor.n_periods
    g = np.zeros(n_lib)
    nu = np.zeros(n_lib)
    beta = np.zeros(n_lib)

    def build():
        return LmmParams.build(tenor, list(g), list(nu), list(beta), corr_decay, local_vol_kind)

    for _ in range(sweeps):
        for n in range(last, 0, -1):
            spec = SwapSpec(n, last)
            T = float(tenor.dates[n])
            k = n - 1
            a_target = targets.alpha0[k] ** 2

            def f_alpha(x):
                g[n] = x
                return alpha0_sq(spec, curves, build()) - a_target

            g_hi = max(4.0 * targets.alpha0[k], 1e-6)
            g[n] = _bracket_root(f_alpha, 0.0, g_hi, "alpha0", n, T)
            if g[n] <= 0:
                raise CalibrationError(f"expiry index {n} (T={T:g}): alpha0 target needs g = 0")

            def f_nu(x):
                nu[n] = x
                return nu_estimate(spec, curves, build(), mode="exact") - targets.nu[k]

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                nu[n] = _bracket_root(f_nu, 0.0, 1.0, "nu", n, T, max_hi=5.0)

            def f_beta(x):
                beta[n] = x
                prof = time_dependent_params(spec, curves, build())
                return skew_average(prof.betaX, prof.gX_sq, prof.nuX, prof.knots) - targets.beta[k]

            beta[n] = _bracket_root(f_beta, 0.0, 1.0, "beta", n, T, grow=False)
    return build()


# --------------------------------------------------------------------------- spread


@dataclass(frozen=True)
class SpreadCalibration:
    params: LmmParams
    iterations: int
    residual: np.ndarray = field(repr=False)


def _spread_state(spec: SpreadSpec, curves, params):
    """ATM-level vols ``alpha(0)/S(0)`` of both legs and the spread normal vol."""
    T = float(curves.tenor.dates[spec.n])
    out = []
    for leg in spec.legs:
        S0, _ = swap_rate_and_annuity(leg, curves.tenor, curves.fwd, curves.disc)
        out.append(math.sqrt(alpha0_sq(leg, curves, params)) / S0)
    out.append(math.sqrt(spread_atm_variance(spec, curves, params) / T))
    return np.array(out)


def _with_spread_params(params: LmmParams, spec: SpreadSpec, x) -> LmmParams:
    l = spec.n - 1
    g = np.array(params.g)
    g[spec.n, l] = x[0]
    g[spec.n + spec.b, l] = x[1]
    decay = np.array(params.corr_decay)
    decay[l] = x[2]
    return params.replace(g=g, corr_decay=decay)


def calibrate_spread_corr(
    spec: SpreadSpec,
    swaption_vol_targets,
    spread_vol_target: float,
    curves: MarketCurves,
    params: LmmParams,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> SpreadCalibration:
    """Fit ``g_n``, ``g_{n+b}`` and the correlation decay on the interval ``[T_{n-1}, T_n)``.

    Targets: the ATM-level vols ``alpha(0)/S(0)`` of the swaptions ``(n, n+a)``
    and ``(n, n+b)`` and the spread normal vol.  Damped Newton with a
    forward-difference Jacobian; variables are kept nonnegative.
    """
    if spec.a >= spec.b:
        raise ParameterError("spread calibration needs a < b")
    spec.check(curves.tenor)
    target = np.array([*swaption_vol_targets, spread_vol_target], dtype=float)
    if target.shape != (3,):
        raise ParameterError("need two swaption vol targets and one spread vol target")
    l = spec.n - 1
    x = np.array([params.g[spec.n, l], params.g[spec.n + spec.b, l], params.corr_decay[l]])
    scale = np.array([max(x[0], 1e-6), max(x[1], 1e-6), max(x[2], 1e-2)])

    def resid(z):
        return _spread_state(spec, curves, _with_spread_params(params, spec, z)) - target

    r = resid(x)
    for it in range(max_iter + 1):
        if np.max(np.abs(r)) <= tol:
            return SpreadCalibration(_with_spread_params(params, spec, x), it, r)
        if it == max_iter:
            break
        J = np.empty((3, 3))
        for k in range(3):
            hstep = 1e-7 * scale[k]
            z = x.copy()
            z[k] += hstep
            J[:, k] = (resid(z) - r) / hstep
        if not np.all(np.isfinite(J)) or abs(np.linalg.det(J / J.max())) < 1e-14:
            raise CalibrationError(f"singular Jacobian at iteration {it}; residual {r}")
        step = np.linalg.solve(J, -r)
        lam = 1.0
        norm = np.linalg.norm(r)
        while lam > 1e-6:
            z = np.maximum(x + lam * step, 0.0)
            rz = resid(z)
            if np.linalg.norm(rz) < norm:
                x, r = z, rz
                break
            lam *= 0.5
        else:
            raise CalibrationError(
                f"spread calibration stalled at iteration {it}; residual {r} "
                f"(g_n={x[0]:.6g}, g_n+b={x[1]:.6g}, corr_decay={x[2]:.6g})"
            )
    raise CalibrationError(f"spread calibration did not converge in {max_iter} iterations; residual {r}")
