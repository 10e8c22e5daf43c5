"""ATM variance of a CMS spread and its Bachelier quote.

Both swap rates fix at ``T_n``; the first covers Libors ``n..n+a`` (payments
at ``T_{n+1}..T_{n+a+1}``), the second ``n..n+b``.  With frozen weights the
spread is the basket ``sum_i (v^1_i - v^2_i) L_i``, so its variance to ``T_n``
is a quadratic form in the stochastic-volatility weighted Libor covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import LmmParams
from .pricers import bachelier_price
from .projection import libor_covariance
from .tenor import MarketCurves, SwapSpec, swap_rate_and_annuity, swap_weights


@dataclass(frozen=True)
class SpreadSpec:
    """Spread ``S_1 - S_2`` of the swaps ``(n, n+a)`` and ``(n, n+b)``, strike ``K``."""

    n: int
    a: int
    b: int
    K: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.a < 1 or self.b < 1:
            raise ParameterError("spread needs n >= 1 and leg lengths a, b >= 1")

    @property
    def legs(self) -> tuple[SwapSpec, SwapSpec]:
        return SwapSpec(self.n, self.n + self.a), SwapSpec(self.n, self.n + self.b)

    def check(self, tenor) -> None:
        for leg in self.legs:
            leg.check(tenor)


def spread_weights(spec: SpreadSpec, curves: MarketCurves):
    """Libor indices and net weights ``v^1 - v^2`` (zero-padded to the longer leg)."""
    spec.check(curves.tenor)
    leg1, leg2 = spec.legs
    size = max(spec.a, spec.b) + 1
    w = np.zeros(size)
    w[: spec.a + 1] += swap_weights(leg1, curves.tenor, curves.disc)
    w[: spec.b + 1] -= swap_weights(leg2, curves.tenor, curves.disc)
    return np.arange(spec.n, spec.n + size), w


def spread_atm_variance(spec: SpreadSpec, curves: MarketCurves, params: LmmParams) -> float:
    """Total variance of ``S_1 - S_2`` to ``T_n`` on the ATM path."""
    if spec.a == spec.b:
        return 0.0
    idx, w = spread_weights(spec, curves)
    var = float(w @ libor_covariance(params, spec.n, idx) @ w)
    return max(var, 0.0)


@dataclass(frozen=True)
class SpreadQuote:
    normal_vol: float
    premium: float  # forward (undiscounted) premium per unit notional
    forward: float


def spread_option_quote(spec: SpreadSpec, curves: MarketCurves, params: LmmParams) -> SpreadQuote:
    """Normal vol ``sqrt(variance / T_n)`` and the Bachelier premium on the forward spread."""
    var = spread_atm_variance(spec, curves, params)
    T = float(curves.tenor.dates[spec.n])
    leg1, leg2 = spec.legs
    s1, _ = swap_rate_and_annuity(leg1, curves.tenor, curves.fwd, curves.disc)
    s2, _ = swap_rate_and_annuity(leg2, curves.tenor, curves.fwd, curves.disc)
    fwd = s1 - s2
    vol = math.sqrt(var / T)
    return SpreadQuote(vol, float(bachelier_price(fwd, spec.K, vol, T)), fwd)
