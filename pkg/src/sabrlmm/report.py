"""Three-way co-terminal smile comparison (AKRS, Hagan, Monte Carlo) and its CSV form."""

from __future__ import annotations

import contextlib
import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .akrs import akrs_implied_vol
from .config import RunConfig, load_curves, load_model
from .errors import SabrLmmError
from .mc import price_swaption_mc, simulate
from .pricers import hagan_implied_vol
from .projection import coterminal_specs, project_swap_sabr
from .tenor import swap_rate_and_annuity

SIG_DIGITS = 6


class ReportError(SabrLmmError):
    """A module error re-raised with the module and operation it came from."""

    def __init__(self, module: str, operation: str, message: str):
        super().__init__(f"[{module}.{operation}] {message}")
        self.module = module
        self.operation = operation


@contextlib.contextmanager
def stage(module: str, operation: str, context: str = ""):
    try:
        yield
    except ReportError:
        raise
    except SabrLmmError as exc:
        where = f"{context}: " if context else ""
        raise ReportError(module, operation, f"{where}{exc}") from exc


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    if not math.isfinite(x) or x == 0:
        return float(x)
    return float(f"{x:.{digits - 1}e}")


@dataclass(frozen=True)
class ReportTable:
    """Implied vols per co-terminal expiry and strike.

    ``vols[method]`` has shape ``(expiries, strikes)``; ``mc_se`` is the MC
    vol standard error (or ``None``).  Unresolvable cells (MC price with no
    sample beyond intrinsic) are NaN.
    """

    maturities: np.ndarray
    forwards: np.ndarray
    strikes: np.ndarray
    vols: dict
    mc_se: np.ndarray | None = None
    notes: tuple = field(default=(), compare=False)

    @property
    def methods(self) -> tuple:
        return tuple(self.vols)

    def pairs(self):
        return list(itertools.combinations(self.methods, 2))

    def abs_error(self, a: str, b: str) -> np.ndarray:
        return np.abs(self.vols[a] - self.vols[b])

    def summary(self) -> dict:
        """Per-expiry mean absolute error per method pair (NaN cells skipped)."""
        out = {}
        for a, b in self.pairs():
            err = self.abs_error(a, b)
            with np.errstate(invalid="ignore"):
                out[(a, b)] = np.array(
                    [np.nanmean(r) if np.any(np.isfinite(r)) else np.nan for r in err]
                )
        return out

    def equals(self, other: "ReportTable") -> bool:
        same = (
            self.methods == other.methods
            and np.array_equal(self.maturities, other.maturities)
            and np.array_equal(self.forwards, other.forwards)
            and np.array_equal(self.strikes, other.strikes)
            and all(np.array_equal(self.vols[m], other.vols[m], equal_nan=True) for m in self.methods)
        )
        if self.mc_se is None or other.mc_se is None:
            return same and self.mc_se is None and other.mc_se is None
        return same and np.array_equal(self.mc_se, other.mc_se, equal_nan=True)


# --------------------------------------------------------------------------- CSV


def _cell(x: float) -> str:
    return "" if not math.isfinite(x) else repr(float(x))


def _parse(s: str) -> float:
    return math.nan if s == "" else float(s)


def table_to_csv(table: ReportTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["maturity", "forward"]
    for m in table.methods:
        header += [f"{m}@{float(k)!r}" for k in table.strikes]
    if table.mc_se is not None:
        header += [f"mc_se@{float(k)!r}" for k in table.strikes]
    w.writerow(header)
    for r in range(table.maturities.size):
        row = [repr(float(table.maturities[r])), repr(float(table.forwards[r]))]
        for m in table.methods:
            row += [_cell(v) for v in table.vols[m][r]]
        if table.mc_se is not None:
            row += [_cell(v) for v in table.mc_se[r]]
        w.writerow(row)
    return buf.getvalue()


def table_from_csv(text: str) -> ReportTable:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header[2:], start=2):
        method, strike = name.split("@")
        cols.setdefault(method, []).append((float(strike), j))
    data = np.array([[_parse(c) for c in r] for r in body], dtype=float).reshape(len(body), len(header))
    mc_se = cols.pop("mc_se", None)
    strikes = np.array([k for k, _ in next(iter(cols.values()))])
    vols = {m: data[:, [j for _, j in c]] for m, c in cols.items()}
    se = None if mc_se is None else data[:, [j for _, j in mc_se]]
    return ReportTable(data[:, 0], data[:, 1], strikes, vols, se)


def summary_to_csv(table: ReportTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    summ = table.summary()
    w.writerow(["maturity"] + [f"mae_{a}_{b}" for a, b in summ])
    for r in range(table.maturities.size):
        w.writerow([repr(float(table.maturities[r]))] + [_cell(v[r]) for v in summ.values()])
    return buf.getvalue()


def format_table(table: ReportTable, percent: bool = False) -> str:
    """Fixed-width text view, optionally in percent like the published tables."""
    scale, fmt = (100.0, "{:7.2f}") if percent else (1.0, "{:8.5f}")
    width = 7 if percent else 8
    lines = []
    for m in table.methods:
        lines.append(f"[{m}]")
        head = "Mat".rjust(5) + "  Fwd".ljust(9) + "".join(
            (f"{100 * k:.1f}%" if percent else f"{k:g}").rjust(width + 1) for k in table.strikes
        )
        lines.append(head)
        for r in range(table.maturities.size):
            cells = "".join(
                " " + (fmt.format(scale * v) if math.isfinite(v) else "-".rjust(width))
                for v in table.vols[m][r]
            )
            lines.append(f"{table.maturities[r]:5.1f}  {table.forwards[r]:.5f}{cells}")
        lines.append("")
    return "\n".join(lines)


# --------------------------------------------------------------------------- run


def run_report(cfg: RunConfig, write: bool = True, workers: int | None = None) -> ReportTable:
    """Evaluate every co-terminal swaption ``(n, last)`` on the strike grid.

    Analytic cells are evaluated in a thread pool over expiries; the MC
    method uses one shared ensemble simulated to the last expiry.
    """
    with stage("config", "load_curves"):
        curves = load_curves(cfg.curve_path)
    with stage("config", "load_model"):
        params = load_model(cfg.model_path, curves.tenor)
    tenor = curves.tenor
    last = tenor.last_index if cfg.last_index is None else cfg.last_index
    with stage("report", "coterminal_specs"):
        if not 1 <= last <= tenor.last_index:
            raise SabrLmmError(f"last_index {last} outside 1..{tenor.last_index}")
        specs = coterminal_specs(tenor, last)
    strikes = np.array(cfg.strikes, dtype=float)
    n_exp = len(specs)
    maturities = np.array([float(tenor.dates[s.n]) for s in specs])
    forwards = np.array(
        [swap_rate_and_annuity(s, tenor, curves.fwd, curves.disc)[0] for s in specs]
    )
    vols = {}
    notes = []

    projected = []
    for s in specs:
        with stage("projection", "project_swap_sabr", f"swaption ({s.n}, {s.m})"):
            projected.append(project_swap_sabr(s, curves, params, nu_mode=cfg.nu_mode))

    def analytic_row(r):
        p, s = projected[r], specs[r]
        out = {}
        if "akrs" in cfg.methods:
            with stage("pricers", "akrs_implied_vol", f"swaption ({s.n}, {s.m})"):
                out["akrs"] = [akrs_implied_vol(p, K) for K in strikes]
        if "hagan" in cfg.methods:
            h = p.to_hagan()
            with stage("pricers", "hagan_implied_vol", f"swaption ({s.n}, {s.m})"):
                out["hagan"] = [hagan_implied_vol(h, p.S0, K, p.expiry) for K in strikes]
        return out

    pool_size = max(1, cfg.mc.workers if workers is None else workers)
    if pool_size > 1:
        with ThreadPoolExecutor(pool_size) as pool:
            rows = list(pool.map(analytic_row, range(n_exp)))
    else:
        rows = [analytic_row(r) for r in range(n_exp)]

    mc_se = None
    for m in cfg.methods:
        if m == "mc":
            with stage("mc_engine", "simulate"):
                ens = simulate(params, curves, cfg.mc, horizon=float(tenor.dates[last]))
            v = np.full((n_exp, strikes.size), np.nan)
            se = np.full_like(v, np.nan)
            for r, s in enumerate(specs):
                for c, K in enumerate(strikes):
                    with stage("mc_engine", "price_swaption_mc", f"swaption ({s.n}, {s.m}) K={K:g}"):
                        try:
                            q = price_swaption_mc(ens, s, K)
                        except SabrLmmError as exc:
                            # no sample beyond intrinsic or failed inversion: leave the cell empty
                            notes.append(f"mc ({s.n}, {s.m}) K={K:g}: {exc}")
                            continue
                    v[r, c] = round_sig(q.vol)
                    se[r, c] = round_sig(q.vol_se)
            vols["mc"] = v
            mc_se = se
        else:
            vols[m] = np.array([[round_sig(x) for x in row[m]] for row in rows])
    table = ReportTable(
        maturities, np.array([round_sig(f, 12) for f in forwards]), strikes, vols, mc_se, tuple(notes)
    )
    if write:
        write_report(table, cfg.output, cfg.summary_path)
    return table


def write_report(table: ReportTable, path, summary_path) -> None:
    path, summary_path = Path(path), Path(summary_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary_path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_to_csv(table))
    summary_path.write_text(summary_to_csv(table))
