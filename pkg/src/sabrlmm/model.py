"""SABR/LMM parameter set.

Each Libor ``L_i`` follows

    dL_i = mu_i dt + alpha_i g_i phi_i(L_i) dW_i,    d alpha_i = nu_i alpha_i dZ_i,

with ``alpha_i(0) = 1``, rate correlation ``exp(-corr_decay(t) |T_i - T_j|)``,
rate/vol drivers independent and all vol drivers perfectly correlated.
``g`` carries the rate scale (``phi`` is normalised to 1 at ``L_i(0)``), so for a
1.3% curve a ``g`` near 0.0013 gives roughly 10% lognormal volatility.

Parameters are piecewise constant on tenor intervals ``[T_l, T_{l+1})`` and only
defined before the Libor fixes, i.e. for ``l < i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .tenor import TenorStructure


class LocalVolKind(str, enum.Enum):
    CEV = "CEV"
    DD = "DD"


@dataclass(frozen=True)
class PiecewiseConstantParam:
    """``values[l]`` applies on ``[knots[l], knots[l+1])``."""

    values: np.ndarray
    knots: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        knots = np.asarray(self.knots, dtype=float)
        if knots.size != values.size + 1:
            raise ParameterError("need exactly one more knot than values")
        if not np.all(np.isfinite(values)):
            raise ParameterError("piecewise-constant values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "knots", knots)

    @property
    def horizon(self) -> float:
        return float(self.knots[-1])


def param_at(p: PiecewiseConstantParam, t: float) -> float:
    """Value on the left-closed interval containing ``t``."""
    if t < p.knots[0] or t >= p.horizon:
        raise ParameterError(f"t = {t} outside [{p.knots[0]}, {p.horizon})")
    return float(p.values[np.searchsorted(p.knots, t, side="right") - 1])


def _expand(value, n_libors: int, n_intervals: int, name: str) -> np.ndarray:
    """Broadcast scalar / per-Libor / per-Libor-per-interval input to a dense matrix.

    Entries at or after a Libor's fixing (``l >= i``) are NaN.
    """
    out = np.full((n_libors, n_intervals), np.nan)
    if np.isscalar(value) or (isinstance(value, np.ndarray) and value.ndim == 0):
        for i in range(n_libors):
            out[i, :i] = float(value)
        return out
    if isinstance(value, np.ndarray) and value.ndim == 2:
        if value.shape[0] != n_libors:
            raise ParameterError(f"{name}: expected {n_libors} rows, got {value.shape[0]}")
        for i in range(n_libors):
            width = min(i, n_intervals)
            out[i, :width] = value[i, :width]
        return out
    if len(value) != n_libors:
        raise ParameterError(f"{name}: expected {n_libors} per-Libor entries, got {len(value)}")
    for i, entry in enumerate(value):
        if np.ndim(entry) == 0:
            out[i, :i] = float(entry)
        else:
            entry = np.asarray(entry, dtype=float)
            if entry.size != i:
                raise ParameterError(
                    f"{name}[{i}]: Libor {i} needs {i} interval values, got {entry.size}"
                )
            out[i, :i] = entry
    return out


@dataclass(frozen=True)
class LmmParams:
    """Dense parameter matrices indexed ``[libor i, interval l]``.

    ``g``, ``nu`` and ``skew`` have shape ``(N+1, N)``; ``corr_decay`` has shape
    ``(N,)``.  Use :meth:`build` to construct from scalars or nested lists.
    """

    tenor: TenorStructure
    g: np.ndarray
    nu: np.ndarray
    skew: np.ndarray
    corr_decay: np.ndarray
    local_vol_kind: LocalVolKind = LocalVolKind.CEV

    def __post_init__(self):
        n_lib, n_int = self.tenor.n_periods, self.tenor.n_periods - 1
        kind = LocalVolKind(self.local_vol_kind)
        object.__setattr__(self, "local_vol_kind", kind)
        valid = np.tril(np.ones((n_lib, n_int), dtype=bool), k=-1)
        for name in ("g", "nu", "skew"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n_lib, n_int):
                raise ParameterError(f"{name} must have shape {(n_lib, n_int)}, got {arr.shape}")
            vals = arr[valid]
            if not np.all(np.isfinite(vals)):
                raise ParameterError(f"{name} must be finite before each Libor's fixing")
            arr[~valid] = np.nan
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.g[valid] < 0) or np.any(self.nu[valid] < 0):
            raise ParameterError("g and nu must be nonnegative")
        if np.any(self.skew[valid] < 0) or np.any(self.skew[valid] > 1):
            raise ParameterError("skew must lie in [0, 1]")
        cd = np.array(np.broadcast_to(self.corr_decay, (n_int,)), dtype=float)
        if not np.all(np.isfinite(cd)) or np.any(cd < 0):
            raise ParameterError("corr_decay must be finite and nonnegative")
        cd.setflags(write=False)
        object.__setattr__(self, "corr_decay", cd)

    @classmethod
    def build(cls, tenor, g, nu, skew, corr_decay, local_vol_kind=LocalVolKind.CEV):
        """Accept scalars, per-Libor lists (time-constant) or per-Libor interval lists."""
        n_lib, n_int = tenor.n_periods, tenor.n_periods - 1
        return cls(
            tenor,
            _expand(g, n_lib, n_int, "g"),
            _expand(nu, n_lib, n_int, "nu"),
            _expand(skew, n_lib, n_int, "skew"),
            np.broadcast_to(np.asarray(corr_decay, dtype=float), (n_int,)),
            local_vol_kind,
        )

    @property
    def n_libors(self) -> int:
        return self.tenor.n_periods

    @property
    def n_intervals(self) -> int:
        return self.tenor.n_periods - 1

    def libor_param(self, name: str, i: int) -> PiecewiseConstantParam:
        arr = getattr(self, name)
        return PiecewiseConstantParam(arr[i, :i], self.tenor.dates[: i + 1])

    def corr_param(self) -> PiecewiseConstantParam:
        return PiecewiseConstantParam(self.corr_decay, self.tenor.dates[:-1])

    def replace(self, **changes) -> "LmmParams":
        fields = dict(
            tenor=self.tenor,
            g=self.g,
            nu=self.nu,
            skew=self.skew,
            corr_decay=self.corr_decay,
            local_vol_kind=self.local_vol_kind,
        )
        fields.update(changes)
        return LmmParams(**fields)

    def correlation_matrix(self, l: int, indices=None) -> np.ndarray:
        """Rate correlation on interval ``l`` over ``indices`` (default: all Libors)."""
        dates = self.tenor.dates[:-1]
        if indices is not None:
            dates = dates[np.asarray(indices)]
        return np.exp(-self.corr_decay[l] * np.abs(dates[:, None] - dates[None, :]))


def rate_correlation(params: LmmParams, t: float, i: int, j: int) -> float:
    """``rho_ij(t) = exp(-corr_decay(t) |T_i - T_j|)``."""
    decay = param_at(params.corr_param(), t)
    dates = params.tenor.dates
    return float(np.exp(-decay * abs(dates[i] - dates[j])))


def local_vol_value(kind, beta, L, L0):
    """Vectorised ``phi`` for either local-vol kind."""
    L = np.asarray(L, dtype=float)
    if LocalVolKind(kind) is LocalVolKind.CEV:
        if np.any(L < 0):
            raise ParameterError("CEV local volatility undefined for negative rates")
        return (L / L0) ** beta
    return (L0 + beta * (L - L0)) / L0


def local_vol(params: LmmParams, t: float, i: int, L, L0: float):
    """``phi_i(t, L)``; the model holds no curve, so ``L0 = L_i(0)`` is passed in."""
    if L0 <= 0:
        raise ParameterError("local volatility needs a positive initial rate L0")
    beta = param_at(params.libor_param("skew", i), t)
    return local_vol_value(params.local_vol_kind, beta, L, L0)
