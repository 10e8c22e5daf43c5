"""Exact call price for uncorrelated SABR (heat-kernel representation).

For ``dS = alpha_std S^beta dW``, ``d alpha = nu alpha dZ`` with ``dW dZ = 0``:

    V - (S0 - K)^+ = (2/pi) sqrt(K S0) [ int_{s-}^{s+} sin(eta phi(s)) G(t, s) / sinh s ds
                                         + sin(eta pi) int_{s+}^inf exp(-eta psi(s)) G(t, s) / sinh s ds ]

with ``t = nu^2 T``.  Both outer integrals are taken in the angle variables
themselves: ``theta = phi(s)`` on the first range and ``chi = psi(s)`` on the
second.  This removes the inverse-square-root behaviour at ``s-`` and ``s+``
and makes the zeros of ``sin(eta theta)`` equally spaced panel edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import ParameterError, QuadratureError
from .pricers import UncorrelatedSabrParams, cev_price_oracle, implied_vol
from .quadrature import adaptive_gk21, gauss_legendre_unit

NU_FLOOR = 1e-4
BETA_NUDGE = 1.0 - 1e-6
MAX_PANELS = 2000
G_RTOL = 1e-10
_G_BASE_NODES = 32
_G_MAX_NODES = 1024


@lru_cache(maxsize=None)
def _gl(n):
    x, w = gauss_legendre_unit(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def akrs_kernel_G(t: float, s, rtol: float = G_RTOL, backend=None):
    """``G(t, s) = 2 sqrt(2) e^{-t/8} / (t sqrt(2 pi t)) int_s^inf u e^{-u^2/2t} sqrt(cosh u - cosh s) du``.

    Gauss-Legendre in ``w = sqrt(u - s)`` with node doubling until two
    successive rules agree to ``rtol``.
    """
    if not t > 0:
        raise ParameterError(f"G needs t > 0, got {t}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ParameterError("G needs finite s >= 0")
    kern = _backend.kernels if backend is None else _backend.get(backend)
    flat = s.ravel()
    n = _G_BASE_NODES
    coarse = kern.akrs_g(t, flat, *_gl(n))
    out = np.empty_like(coarse)
    todo = np.arange(flat.size)
    while True:
        n *= 2
        fine = kern.akrs_g(t, flat[todo], *_gl(n))
        diff = np.abs(fine - coarse)
        ok = diff <= rtol * np.abs(fine)
        out[todo[ok]] = fine[ok]
        if ok.all():
            return out.reshape(s.shape)
        if n >= _G_MAX_NODES:
            worst = float(np.max(diff[~ok] / np.abs(fine[~ok])))
            raise QuadratureError(f"G(t={t}) did not converge with {n} nodes", achieved=worst)
        todo, coarse = todo[~ok], fine[~ok]


@dataclass(frozen=True)
class AkrsGeometry:
    """Strike-dependent constants of the exact formula."""

    eta: float
    q: float
    q0: float
    s_minus: float
    s_plus: float
    sinh_minus: float
    sinh_plus: float
    gap: float  # sinh^2(s+) - sinh^2(s-), computed without cancellation

    @classmethod
    def build(cls, S0, alpha_std, beta, nu, K):
        omb = 1.0 - beta
        q = K**omb / omb
        q0 = S0**omb / omb
        scale = nu / alpha_std
        sh_m = scale * abs(q - q0)
        sh_p = scale * (q + q0)
        gap = 4.0 * scale * scale * q * q0
        return cls(0.5 / omb, q, q0, math.asinh(sh_m), math.asinh(sh_p), sh_m, sh_p, gap)


def _first_integrand(geo, t):
    eta, sh2_m, gap = geo.eta, geo.sinh_minus**2, geo.gap

    def f(theta):
        sinh2 = sh2_m + gap * np.sin(0.5 * theta) ** 2
        s = np.arcsinh(np.sqrt(sinh2))
        jac = gap * np.sin(theta) / (4.0 * sinh2 * np.sqrt(1.0 + sinh2))
        return np.sin(eta * theta) * jac * akrs_kernel_G(t, s)

    return f


def _second_integrand(geo, t):
    eta, sh2_p, gap = geo.eta, geo.sinh_plus**2, geo.gap

    def f(chi):
        sinh2 = sh2_p + gap * np.sinh(0.5 * chi) ** 2
        s = np.arcsinh(np.sqrt(sinh2))
        jac = gap * np.sinh(chi) / (4.0 * sinh2 * np.sqrt(1.0 + sinh2))
        return np.exp(-eta * chi) * jac * akrs_kernel_G(t, s)

    return f


def _chi_cutoff(geo, t):
    """``chi`` beyond which ``G`` has fallen below ~1e-17 of its largest value."""
    s_cut = min(max(geo.s_plus, 0.5 * t) + math.sqrt(80.0 * t), 700.0)
    excess = math.sinh(s_cut) ** 2 - geo.sinh_plus**2
    if excess <= 0:
        return 0.0
    return 2.0 * math.asinh(math.sqrt(excess / geo.gap))


def akrs_price(p: UncorrelatedSabrParams, K: float, rtol: float = 1e-9) -> float:
    """Forward (undiscounted) call price under uncorrelated SABR, rate normalisation."""
    K = float(K)
    if not K > 0:
        raise ParameterError(f"strike must be positive, got {K}")
    beta = min(p.B, BETA_NUDGE)
    intrinsic = max(p.S0 - K, 0.0)
    if p.nu <= NU_FLOOR:
        return cev_price_oracle(p.S0, p.alpha0, beta, p.expiry, K)
    alpha_std = p.alpha0 / p.S0**beta
    geo = AkrsGeometry.build(p.S0, alpha_std, beta, p.nu, K)
    if geo.eta > MAX_PANELS:
        raise ParameterError(
            f"skew B = {p.B} gives eta = {geo.eta:.3g}; the oscillatory panel count "
            f"exceeds {MAX_PANELS} (B must stay below {1 - 0.5 / MAX_PANELS})"
        )
    if geo.gap <= 1e-300:
        return intrinsic
    t = p.nu * p.nu * p.expiry

    # first integral: panels between consecutive zeros of sin(eta theta)
    f1 = _first_integrand(geo, t)
    n_full = int(math.floor(geo.eta))
    edges = [k * math.pi / geo.eta for k in range(n_full + 1)]
    if edges[-1] < math.pi * (1.0 - 1e-14):
        edges.append(math.pi)
    panels = [adaptive_gk21(f1, a, b, rtol=rtol)[0] for a, b in zip(edges[:-1], edges[1:])]
    first = math.fsum(panels)

    second = 0.0
    sin_eta_pi = math.sin(geo.eta * math.pi)
    if abs(sin_eta_pi) > 1e-14:
        chi_max = _chi_cutoff(geo, t)
        if chi_max > 0:
            f2 = _second_integrand(geo, t)
            # geometric sub-panels so a peak near chi = 0 is never skipped
            cuts = [0.0] + [chi_max * 2.0**-k for k in range(12, -1, -1)]
            second = math.fsum(
                adaptive_gk21(f2, a, b, rtol=rtol)[0] for a, b in zip(cuts[:-1], cuts[1:])
            )

    value = intrinsic + (2.0 / math.pi) * math.sqrt(K * p.S0) * (first + sin_eta_pi * second)
    lo, hi = intrinsic, p.S0
    if value < lo - 1e-9 * p.S0 or value > hi + 1e-9 * p.S0:
        raise QuadratureError(
            f"AKRS price {value:.6g} outside [{lo:.6g}, {hi:.6g}] at K={K}",
            achieved=abs(value - min(max(value, lo), hi)) / p.S0,
        )
    return min(max(value, lo), hi)


def akrs_implied_vol(p: UncorrelatedSabrParams, K: float) -> float:
    return implied_vol(p.S0, K, p.expiry, akrs_price(p, K))
