"""Tenor grid, discount/forward curves, swap rates, annuities and frozen swap weights.

Conventions
-----------
The grid is ``0 = T_0 < T_1 < ... < T_{N+1}`` with one forward Libor ``L_j`` per
period ``[T_j, T_{j+1}]``, ``j = 0..N``.  A swap ``(n, m)`` fixes at ``T_n`` and
exchanges interest at ``T_{n+1}..T_{m+1}``.  Curves live on tenor dates only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CurveError, ParameterError


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TenorStructure:
    """Dates ``T_0..T_{N+1}`` in year fractions plus floating/fixed accruals.

    Accruals default to the date differences ``T_{j+1} - T_j``.
    """

    dates: np.ndarray
    accrual_flt: np.ndarray = None
    accrual_fix: np.ndarray = None

    def __post_init__(self):
        dates = _frozen(self.dates)
        if dates.ndim != 1 or dates.size < 2:
            raise CurveError("tenor needs at least two dates")
        if dates[0] != 0.0:
            raise CurveError(f"first tenor date must be 0, got {dates[0]}")
        if not np.all(np.diff(dates) > 0):
            raise CurveError("tenor dates must be strictly increasing")
        diffs = np.diff(dates)
        flt = diffs if self.accrual_flt is None else self.accrual_flt
        fix = diffs if self.accrual_fix is None else self.accrual_fix
        flt, fix = _frozen(flt), _frozen(fix)
        for name, acc in (("accrual_flt", flt), ("accrual_fix", fix)):
            if acc.shape != diffs.shape:
                raise CurveError(f"{name} must have {diffs.size} entries, got {acc.size}")
            if not np.all(acc > 0):
                raise CurveError(f"{name} must be positive")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "accrual_flt", flt)
        object.__setattr__(self, "accrual_fix", fix)

    @classmethod
    def regular(cls, maturity: float, frequency: int = 2) -> "TenorStructure":
        """Evenly spaced grid, e.g. ``regular(15, 2)`` for 15y semiannual."""
        count = int(round(maturity * frequency))
        return cls(np.arange(count + 1) / frequency)

    @property
    def n_periods(self) -> int:
        """Number of Libor periods, ``N + 1``."""
        return self.dates.size - 1

    @property
    def last_index(self) -> int:
        """``N``: index of the last Libor."""
        return self.dates.size - 2

    def interval_index(self, t: float) -> int:
        """Index ``l`` with ``T_l <= t < T_{l+1}``."""
        if t < 0 or t >= self.dates[-1]:
            raise ParameterError(f"time {t} outside the tenor grid [0, {self.dates[-1]})")
        return int(np.searchsorted(self.dates, t, side="right") - 1)


@dataclass(frozen=True)
class ForwardCurve:
    """Initial forward Libors ``L_j(0)``, one per tenor period."""

    forwards: np.ndarray

    def __post_init__(self):
        fwd = _frozen(self.forwards)
        if fwd.ndim != 1 or not np.all(np.isfinite(fwd)):
            raise CurveError("forwards must be a finite 1-d array")
        object.__setattr__(self, "forwards", fwd)


@dataclass(frozen=True)
class DiscountCurve:
    """Discount factors ``D(0, T_j)`` for ``j = 0..N+1``."""

    discounts: np.ndarray

    def __post_init__(self):
        disc = _frozen(self.discounts)
        if disc.ndim != 1 or disc.size < 2 or disc[0] != 1.0:
            raise CurveError("discount curve must start at D(0, T_0) = 1")
        if not np.all(disc > 0) or not np.all(np.isfinite(disc)):
            raise CurveError("discount factors must be positive and finite")
        object.__setattr__(self, "discounts", disc)


@dataclass(frozen=True)
class SwapSpec:
    """Swap fixing at ``T_n`` with payments at ``T_{n+1}..T_{m+1}``."""

    n: int
    m: int

    def __post_init__(self):
        if not 0 <= self.n <= self.m:
            raise ParameterError(f"swap needs 0 <= n <= m, got ({self.n}, {self.m})")

    def check(self, tenor: TenorStructure) -> None:
        if self.m > tenor.last_index:
            raise ParameterError(
                f"swap ({self.n}, {self.m}) runs past the last Libor index {tenor.last_index}"
            )

    @property
    def indices(self) -> range:
        return range(self.n, self.m + 1)


def discounts_from_forwards(tenor: TenorStructure, fwd: ForwardCurve) -> DiscountCurve:
    """Chain ``D(0,T_{j+1}) = D(0,T_j) / (1 + delta_j L_j(0))``."""
    if fwd.forwards.size != tenor.n_periods:
        raise CurveError(
            f"need {tenor.n_periods} forwards for this tenor, got {fwd.forwards.size}"
        )
    growth = 1.0 + tenor.accrual_flt * fwd.forwards
    if np.any(growth <= 0):
        bad = int(np.argmax(growth <= 0))
        raise CurveError(f"1 + delta*L <= 0 for period {bad} (L = {fwd.forwards[bad]})")
    disc = np.empty(tenor.dates.size)
    disc[0] = 1.0
    disc[1:] = 1.0 / np.cumprod(growth)
    return DiscountCurve(disc)


def forwards_from_discounts(tenor: TenorStructure, disc: DiscountCurve) -> ForwardCurve:
    d = disc.discounts
    return ForwardCurve((d[:-1] / d[1:] - 1.0) / tenor.accrual_flt)


@dataclass(frozen=True)
class MarketCurves:
    """Tenor grid with its consistent forward and discount curves."""

    tenor: TenorStructure
    fwd: ForwardCurve
    disc: DiscountCurve = field(default=None)

    def __post_init__(self):
        if self.disc is None:
            object.__setattr__(self, "disc", discounts_from_forwards(self.tenor, self.fwd))

    @classmethod
    def flat(cls, rate: float, maturity: float = 15.0, frequency: int = 2) -> "MarketCurves":
        tenor = TenorStructure.regular(maturity, frequency)
        return cls(tenor, ForwardCurve(np.full(tenor.n_periods, rate)))

    @property
    def forwards(self) -> np.ndarray:
        return self.fwd.forwards

    @property
    def discounts(self) -> np.ndarray:
        return self.disc.discounts


def annuity(spec: SwapSpec, tenor: TenorStructure, disc: DiscountCurve) -> float:
    spec.check(tenor)
    j = np.arange(spec.n, spec.m + 1)
    return float(np.sum(tenor.accrual_fix[j] * disc.discounts[j + 1]))


def swap_rate_and_annuity(
    spec: SwapSpec, tenor: TenorStructure, fwd: ForwardCurve, disc: DiscountCurve
) -> tuple[float, float]:
    """Forward swap rate ``S_nm(0)`` and annuity ``Ann_nm(0)``."""
    ann = annuity(spec, tenor, disc)
    j = np.arange(spec.n, spec.m + 1)
    flt = np.sum(tenor.accrual_flt[j] * fwd.forwards[j] * disc.discounts[j + 1])
    return float(flt / ann), ann


def swap_weights(spec: SwapSpec, tenor: TenorStructure, disc: DiscountCurve) -> np.ndarray:
    """Frozen weights ``v_i(0) = delta_i^flt D(0,T_{i+1}) / Ann_nm(0)``, ``i = n..m``."""
    ann = annuity(spec, tenor, disc)
    j = np.arange(spec.n, spec.m + 1)
    return tenor.accrual_flt[j] * disc.discounts[j + 1] / ann
