"""Black, Bachelier, Hagan and CEV pricers plus implied-volatility inversion.

All prices are undiscounted (forward) call prices.  SABR parameters come in
two normalisations:

* rate: ``dS = alpha (S/S(0))^beta dW`` -- :class:`UncorrelatedSabrParams`
* market: ``dS = alpha_std S^beta dW`` -- :class:`HaganSabrParams`

so that ``alpha_std = alpha / S(0)^beta``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import ncx2

from .errors import ImpliedVolError, ParameterError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class UncorrelatedSabrParams:
    """Swap-rate SABR with zero rate/vol correlation, rate normalisation."""

    S0: float
    alpha0: float
    B: float
    nu: float
    expiry: float

    def __post_init__(self):
        if not (self.S0 > 0 and self.alpha0 > 0 and self.expiry > 0):
            raise ParameterError(
                f"need S0, alpha0, expiry > 0 (got {self.S0}, {self.alpha0}, {self.expiry})"
            )
        if not 0.0 <= self.B <= 1.0:
            raise ParameterError(f"B must lie in [0, 1], got {self.B}")
        if not self.nu >= 0:
            raise ParameterError(f"nu must be nonnegative, got {self.nu}")

    @property
    def alpha_std(self) -> float:
        return self.alpha0 / self.S0**self.B

    def to_hagan(self) -> "HaganSabrParams":
        return HaganSabrParams(self.alpha_std, self.B, 0.0, self.nu)


@dataclass(frozen=True)
class HaganSabrParams:
    """Market-quoted SABR quadruple ``(alpha_std, beta, rho, nu)``."""

    alpha_std: float
    beta: float
    rho: float
    nu: float

    def __post_init__(self):
        if not self.alpha_std > 0:
            raise ParameterError("alpha_std must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ParameterError("beta must lie in [0, 1]")
        if not -1.0 < self.rho < 1.0:
            raise ParameterError("rho must lie in (-1, 1)")
        if not self.nu >= 0:
            raise ParameterError("nu must be nonnegative")


def alpha_normalization_convert(alpha: float, beta: float, S0: float, direction: str) -> float:
    """``direction="to_std"``: rate alpha to market alpha, ``alpha / S0^beta``;
    ``"to_rate"``: the inverse."""
    if S0 <= 0:
        raise ParameterError("S0 must be positive")
    if direction == "to_std":
        return alpha / S0**beta
    if direction == "to_rate":
        return alpha * S0**beta
    raise ValueError(f"unknown direction {direction!r}")


# --------------------------------------------------------------------------- Black


def black_price(F, K, sigma, T):
    """Forward Black call price; ``sigma = 0`` gives intrinsic."""
    F, K, sigma = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (F, K, sigma)))
    out = np.array(np.maximum(F - K, 0.0))
    sd = sigma * np.sqrt(T)
    live = sd > 0
    if np.any(live):
        f, k, s = F[live], K[live], sd[live]
        d1 = np.log(f / k) / s + 0.5 * s
        out[live] = f * ndtr(d1) - k * ndtr(d1 - s)
    return out[()] if out.ndim == 0 else out


def _black_otm(F, K, sd):
    """Out-of-the-money option price (put when K < F) for total std ``sd``."""
    if sd <= 0:
        return 0.0
    d1 = math.log(F / K) / sd + 0.5 * sd
    d2 = d1 - sd
    if K >= F:
        return F * ndtr(d1) - K * ndtr(d2)
    return K * ndtr(-d2) - F * ndtr(-d1)


def black_vega(F, K, sigma, T):
    sd = sigma * math.sqrt(T)
    if sd <= 0:
        return 0.0
    d1 = math.log(F / K) / sd + 0.5 * sd
    return F * math.sqrt(T) * math.exp(-0.5 * d1 * d1) / _SQRT_2PI


def implied_vol(F: float, K: float, T: float, price: float) -> float:
    """Black volatility of a forward call price.

    Inverts the out-of-the-money side (via parity) with Newton steps kept
    inside a bisection bracket.
    """
    F, K, T, price = float(F), float(K), float(T), float(price)
    if F <= 0 or K <= 0 or T <= 0:
        raise ParameterError("implied_vol needs F, K, T > 0")
    intrinsic = max(F - K, 0.0)
    tol = 1e-14 * F
    if price < intrinsic - tol or price >= F:
        raise ImpliedVolError(
            f"price {price:.6g} outside the no-arbitrage band [{intrinsic:.6g}, {F:.6g})"
        )
    target = price - intrinsic
    if target <= 0:
        return 0.0
    sqrt_t = math.sqrt(T)

    lo, hi = 0.0, 1.0
    while _black_otm(F, K, hi) < target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e3:
            raise ImpliedVolError(f"price {price:.6g} needs total vol beyond {hi}")
    # ATM approximation as the first guess
    sd = _SQRT_2PI * target / F
    if not lo < sd < hi:
        sd = 0.5 * (lo + hi)
    for _ in range(200):
        val = _black_otm(F, K, sd) - target
        if val > 0:
            hi = sd
        else:
            lo = sd
        d1 = math.log(F / K) / sd + 0.5 * sd
        vega = F * math.exp(-0.5 * d1 * d1) / _SQRT_2PI
        new = sd - float(val) / vega if vega > abs(val) * 1e-300 else -1.0
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - sd) <= 1e-15 * sd or hi - lo <= 1e-15 * hi:
            sd = new
            break
        sd = new
    return float(sd / sqrt_t)


def bachelier_price(F, K, sigma_n, T):
    """Forward call under arithmetic Brownian motion."""
    F, K, sigma_n = (np.asarray(x, dtype=float) for x in (F, K, sigma_n))
    sd = sigma_n * np.sqrt(T)
    intrinsic = np.maximum(F - K, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = (F - K) / sd
        val = (F - K) * ndtr(d) + sd * np.exp(-0.5 * d * d) / _SQRT_2PI
    out = np.where(sd > 0, val, intrinsic)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------- Hagan


def hagan_implied_vol(h: HaganSabrParams, F: float, K: float, T: float) -> float:
    """Lognormal SABR expansion of Hagan, Kumar, Lesniewski and Woodward."""
    if F <= 0 or K <= 0 or T <= 0:
        raise ParameterError("hagan_implied_vol needs F, K, T > 0")
    a, b, r, v = h.alpha_std, h.beta, h.rho, h.nu
    omb = 1.0 - b
    log_fk = math.log(F / K)
    fk_pow = (F * K) ** (0.5 * omb)
    denom = fk_pow * (1.0 + omb**2 * log_fk**2 / 24.0 + omb**4 * log_fk**4 / 1920.0)
    z = (v / a) * fk_pow * log_fk
    if abs(log_fk) < 1e-6 or abs(z) < 1e-10:
        # series of z / x(z) around z = 0
        z_over_x = 1.0 - 0.5 * r * z + (2.0 - 3.0 * r * r) * z * z / 12.0
    else:
        x = math.log((math.sqrt(1.0 - 2.0 * r * z + z * z) + z - r) / (1.0 - r))
        z_over_x = z / x
    correction = 1.0 + (
        omb**2 * a * a / (24.0 * fk_pow**2)
        + r * b * v * a / (4.0 * fk_pow)
        + (2.0 - 3.0 * r * r) * v * v / 24.0
    ) * T
    return a / denom * z_over_x * correction


# --------------------------------------------------------------------------- CEV


def cev_price_oracle(S0: float, alpha_det: float, beta: float, T: float, K: float) -> float:
    """Call price for ``dS = alpha_det (S/S0)^beta dW`` absorbed at zero.

    Noncentral chi-square form; close to ``beta = 1``, where the chi-square
    parameters blow up, the lognormal-limit expansion is used instead.
    """
    if not (S0 > 0 and K > 0 and T > 0 and alpha_det >= 0):
        raise ParameterError("cev_price_oracle needs S0, K, T > 0 and alpha_det >= 0")
    if not 0.0 <= beta < 1.0:
        raise ParameterError(f"cev_price_oracle needs beta in [0, 1), got {beta}")
    if alpha_det == 0:
        return max(S0 - K, 0.0)
    sigma = alpha_det / S0**beta
    omb = 1.0 - beta
    if omb < 1e-4:
        vol = hagan_implied_vol(HaganSabrParams(sigma, beta, 0.0, 0.0), S0, K, T)
        return float(black_price(S0, K, vol, T))
    dof = 1.0 / omb
    scale = omb**2 * sigma**2 * T
    x = S0 ** (2.0 * omb) / scale
    y = K ** (2.0 * omb) / scale
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if K >= S0:
            val = S0 * ncx2.sf(y, dof + 2.0, x) - K * ncx2.cdf(x, dof, y)
        else:
            put = K * ncx2.sf(x, dof, y) - S0 * ncx2.cdf(y, dof + 2.0, x)
            val = put + (S0 - K)
    val = float(val)
    if not math.isfinite(val):
        raise ParameterError("noncentral chi-square evaluation failed")
    return min(max(val, max(S0 - K, 0.0)), S0)
