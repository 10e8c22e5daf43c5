"""Monte Carlo simulation of the SABR/LMM under the terminal measure.

The numeraire is the bond maturing at ``T_{N+1}``, which leaves ``L_N``
driftless.  Rates follow a log-Euler scheme with the limited-CEV floor in the
diffusion coefficient, volatilities are updated exactly, and all volatilities
share a single driver independent of the rate drivers.

Random numbers come from a counter-based generator (Philox) keyed per
antithetic pair, so results depend only on ``(seed, path)`` and not on how
paths are grouped into chunks or spread over threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import ImpliedVolError, McError, ParameterError, PriceAtIntrinsicError
from .model import LmmParams, LocalVolKind
from .pricers import black_vega, implied_vol
from .tenor import MarketCurves, SwapSpec, swap_rate_and_annuity

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    num_paths: int = 10000
    step: float = 1.0 / 12.0
    seed: int = 0
    boundary_floor: float = 1e-4
    antithetic: bool = True
    workers: int = 1
    chunk_paths: int = 512

    def __post_init__(self):
        if self.num_paths < 2:
            raise ParameterError("num_paths must be at least 2")
        if not self.step > 0:
            raise ParameterError("step must be positive")
        if not self.boundary_floor > 0:
            raise ParameterError("boundary_floor must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.workers < 1 or self.chunk_paths < 2 or self.chunk_paths % 2:
            raise ParameterError("workers >= 1 and an even chunk_paths >= 2 are required")
        if self.antithetic and self.num_paths % 2:
            raise ParameterError("antithetic sampling needs an even num_paths")


def cholesky_psd(corr: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Lower-triangular ``F`` with ``F F^T = corr``, tolerating zero pivots.

    Rank-deficient matrices (e.g. full correlation) get zero columns where
    the pivot vanishes.
    """
    corr = np.asarray(corr, dtype=float)
    n = corr.shape[0]
    F = np.zeros_like(corr)
    for j in range(n):
        d = corr[j, j] - F[j, :j] @ F[j, :j]
        if d < -tol:
            raise McError(f"correlation matrix is not positive semidefinite (pivot {d:.3g})")
        if d <= tol:
            continue
        F[j, j] = math.sqrt(d)
        F[j + 1 :, j] = (corr[j + 1 :, j] - F[j + 1 :, :j] @ F[j, :j]) / F[j, j]
    return F


def correlation_factors(params: LmmParams, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Factor of the rate correlation over the Libors alive at ``t``.

    Returns ``(alive indices, F)``; the volatility drivers are a single shared
    normal independent of every rate driver.
    """
    l = params.tenor.interval_index(t)
    if l >= params.n_intervals:
        raise ParameterError(f"no Libor is alive at t = {t}")
    alive = np.arange(l + 1, params.n_libors)
    return alive, cholesky_psd(params.correlation_matrix(l, alive))


def _time_grid(tenor, step, n_stop):
    acc = np.diff(tenor.dates)[:n_stop]
    sub = np.maximum(np.ceil(acc / step - 1e-9).astype(np.int64), 1)
    return sub, acc / sub


def _philox_normals(seed: int, stream: int, shape) -> np.ndarray:
    bitgen = np.random.Philox(key=(seed & _MASK64) | (stream << 64))
    return np.random.Generator(bitgen).standard_normal(shape)


@dataclass
class McEnsemble:
    """Simulated Libors (and vols) at tenor dates ``T_0..T_{n_stop}``, per path."""

    curves: MarketCurves
    params: LmmParams
    config: McConfig
    libors: np.ndarray  # (paths, n_stop + 1, N + 1)
    vols: np.ndarray
    n_stop: int

    @property
    def num_paths(self) -> int:
        return self.libors.shape[0]

    def group_means(self, values: np.ndarray) -> np.ndarray:
        """Average antithetic partners so samples are independent."""
        if self.config.antithetic:
            return 0.5 * (values[0::2] + values[1::2])
        return values


def simulate(
    params: LmmParams,
    curves: MarketCurves,
    cfg: McConfig = McConfig(),
    horizon: float | None = None,
    backend: str | None = None,
    dump_path=None,
) -> McEnsemble:
    """Simulate to ``horizon`` (default ``T_N``), which must be a tenor date."""
    tenor = curves.tenor
    N = tenor.last_index
    if horizon is None:
        n_stop = N
    else:
        hits = np.flatnonzero(np.isclose(tenor.dates, horizon, rtol=0, atol=1e-12))
        if hits.size != 1 or hits[0] > N or hits[0] < 1:
            raise ParameterError(f"horizon {horizon} must be a tenor date in (0, T_N]")
        n_stop = int(hits[0])
    if cfg.step > np.min(np.diff(tenor.dates)) + 1e-12:
        raise ParameterError("step must not exceed the shortest accrual period")
    n_lib = tenor.n_periods
    L0 = np.ascontiguousarray(curves.forwards, dtype=float)
    if params.local_vol_kind is LocalVolKind.CEV and np.any(L0 <= 0):
        raise ParameterError("CEV simulation needs positive initial forwards")
    kind = 0 if params.local_vol_kind is LocalVolKind.CEV else 1

    def per_interval(arr):
        return np.ascontiguousarray(np.nan_to_num(arr.T, nan=0.0))

    g, nu, beta = (per_interval(getattr(params, k)) for k in ("g", "nu", "skew"))
    fac = np.zeros((params.n_intervals, n_lib, n_lib))
    rho = np.zeros_like(fac)
    for l in range(n_stop):
        alive = np.arange(l + 1, n_lib)
        block = params.correlation_matrix(l, alive)
        rho[l][np.ix_(alive, alive)] = block
        fac[l][np.ix_(alive, alive)] = cholesky_psd(block)
    # nearest-neighbour correlations; exact since rho_ij = exp(-decay |T_i - T_j|)
    chain = np.zeros((params.n_intervals, n_lib))
    for l in range(n_stop):
        chain[l, l + 2 :] = np.diagonal(rho[l], offset=-1)[l + 1 :]
    delta = np.ascontiguousarray(tenor.accrual_flt, dtype=float)
    sub, dts = _time_grid(tenor, cfg.step, n_stop)
    sub_full = np.zeros(params.n_intervals, dtype=np.int64)
    dts_full = np.zeros(params.n_intervals)
    sub_full[:n_stop], dts_full[:n_stop] = sub, dts
    total_steps = int(sub.sum())
    dim = n_lib + 1
    kern = _backend.kernels if backend is None else _backend.get(backend)

    P = cfg.num_paths
    out_L = np.empty((P, n_stop + 1, n_lib))
    out_A = np.empty((P, n_stop + 1, n_lib))
    record = np.empty((P if dump_path else 0, total_steps + 1 if dump_path else 0, 2 * n_lib))
    if not dump_path:
        record = np.empty((0, 0, 0))
    chunks = [(s, min(s + cfg.chunk_paths, P)) for s in range(0, P, cfg.chunk_paths)]

    def run(bounds):
        start, stop = bounds
        count = stop - start
        if cfg.antithetic:
            first = start // 2
            streams = range(first, first + count // 2)
            src = np.repeat(np.arange(count // 2), 2)
            sign = np.tile([1.0, -1.0], count // 2)
        else:
            streams = range(start, stop)
            src = np.arange(count)
            sign = np.ones(count)
        z = np.stack([_philox_normals(cfg.seed, s, (total_steps, dim)) for s in streams])
        rec = record[start:stop] if record.shape[0] else record
        bad = kern.evolve_paths(
            L0, g, nu, beta, fac, rho, chain, delta, sub_full, dts_full, kind,
            float(cfg.boundary_floor), z, src.astype(np.int64), sign, n_stop,
            out_L[start:stop], out_A[start:stop], rec,
        )
        return start, bad

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    for start, bad in results:
        if bad >= 0:
            raise McError(
                f"non-finite state on path {start + bad}; reduce the step or check parameters"
            )
    if dump_path:
        _write_dump(dump_path, record, sub)
    return McEnsemble(curves, params, cfg, out_L, out_A, n_stop)


def _write_dump(path, record, sub):
    """CSV rows ``step, path, L_0..L_N, alpha_0..alpha_N`` (one per path per step)."""
    P, steps, width = record.shape
    n_lib = width // 2
    header = ["step", "path"] + [f"L{i}" for i in range(n_lib)] + [f"alpha{i}" for i in range(n_lib)]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for k in range(steps):
            for p in range(P):
                out.writerow([k, p] + [repr(float(x)) for x in record[p, k]])


def _bond_matrix(ens: McEnsemble, n: int) -> np.ndarray:
    """``P(T_n, T_{j+1})`` for ``j = n..N`` on every path."""
    tenor = ens.curves.tenor
    L = ens.libors[:, n, n:]
    return 1.0 / np.cumprod(1.0 + tenor.accrual_flt[n:] * L, axis=1)


def bond_martingale(ens: McEnsemble):
    """Estimates of ``D(0, T_j)`` from the numeraire and their standard errors, ``j = 1..n_stop``.

    ``D(0,T_j) = D(0,T_{N+1}) E[1 / D(T_j, T_{N+1})]`` under the terminal measure.
    """
    d_end = ens.curves.discounts[-1]
    est, se = [], []
    for j in range(1, ens.n_stop + 1):
        x = d_end / _bond_matrix(ens, j)[:, -1]
        m = ens.group_means(x)
        est.append(m.mean())
        se.append(m.std(ddof=1) / math.sqrt(m.size))
    return np.array(est), np.array(se)


@dataclass(frozen=True)
class McQuote:
    price: float  # forward premium per unit annuity, call (payer)
    price_se: float
    vol: float
    vol_se: float


def swap_rate_paths(ens: McEnsemble, spec: SwapSpec):
    """Per path at ``T_n``: swap rate, annuity and deflator ``D(0,T_{N+1}) / D(T_n,T_{N+1})``."""
    tenor, curves = ens.curves.tenor, ens.curves
    spec.check(tenor)
    n = spec.n
    if n < 1 or n > ens.n_stop:
        raise ParameterError(f"expiry index {n} outside the simulated horizon 1..{ens.n_stop}")
    P = _bond_matrix(ens, n)
    k = spec.m - n + 1
    L = ens.libors[:, n, n : spec.m + 1]
    ann = P[:, :k] @ tenor.accrual_fix[n : spec.m + 1]
    flt = (P[:, :k] * L) @ tenor.accrual_flt[n : spec.m + 1]
    return flt / ann, ann, curves.discounts[-1] / P[:, -1]


def swaption_price_mc(ens: McEnsemble, spec: SwapSpec, K: float):
    """Forward payer premium per unit of today's annuity, ``(price, se, otm_part)``.

    The forward swap, whose value ``S(0) - K`` is known exactly, serves as a
    control variate with a regression coefficient estimated from the same
    (antithetic-pair averaged) samples.  ``otm_part`` is the premium above
    intrinsic.
    """
    curves = ens.curves
    S0, ann0 = swap_rate_and_annuity(spec, curves.tenor, curves.fwd, curves.disc)
    S, ann, deflate = swap_rate_paths(ens, spec)
    weight = ann * deflate / ann0
    y = ens.group_means(weight * np.maximum(S - K, 0.0))
    c = ens.group_means(weight * (S - K))
    dc = c - c.mean()
    var_c = float(dc @ dc)
    b = float((y - y.mean()) @ dc) / var_c if var_c > 0 else 0.0
    adj = y - b * c
    price = float(adj.mean()) + b * (S0 - K)
    se = float(adj.std(ddof=1) / math.sqrt(adj.size))
    return price, se, price - max(S0 - K, 0.0)


def price_swaption_mc(ens: McEnsemble, spec: SwapSpec, K: float) -> McQuote:
    """Payer swaption premium per unit annuity and its implied Black vol with delta-method SE."""
    price, otm_se, otm = swaption_price_mc(ens, spec, K)
    tenor, curves = ens.curves.tenor, ens.curves
    n = spec.n
    S0, _ = swap_rate_and_annuity(spec, tenor, curves.fwd, curves.disc)
    T = float(tenor.dates[n])
    if otm <= 1e-14 * S0:
        raise PriceAtIntrinsicError(
            f"MC price of swaption ({n}, {spec.m}) at K={K} is at intrinsic: price at intrinsic"
        )
    try:
        vol = implied_vol(S0, K, T, price)
    except ImpliedVolError as exc:
        raise ImpliedVolError(
            f"MC price {price:.6g} (SE {otm_se:.3g}) of swaption ({n}, {spec.m}) at K={K}: {exc}"
        ) from exc
    vega = black_vega(S0, K, vol, T)
    vol_se = otm_se / vega if vega > 0 else math.inf
    return McQuote(price, otm_se, vol, vol_se)
