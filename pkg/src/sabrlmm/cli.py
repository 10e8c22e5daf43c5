"""``sabrlmm`` command line."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import DEFAULT_STRIKES, load_config, load_curves, load_model, load_targets, save_model
from .errors import SabrLmmError
from .report import ReportError, format_table, run_report, stage


def _strikes(text):
    return [float(x) for x in text.split(",")] if text else list(DEFAULT_STRIKES)


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(curve, model=None):
    with stage("config", "load_curves"):
        curves = load_curves(curve)
    if model is None:
        return curves
    with stage("config", "load_model"):
        return curves, load_model(model, curves.tenor)


def cmd_report(args):
    with stage("config", "load_config"):
        cfg = load_config(args.config)
    changes = {}
    mc_changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
        mc_changes["seed"] = args.seed
    if args.paths is not None:
        mc_changes["num_paths"] = args.paths
    if args.workers is not None:
        mc_changes["workers"] = args.workers
    if args.methods:
        changes["methods"] = tuple(args.methods.split(","))
    if args.out:
        changes["output"] = Path(args.out)
    if mc_changes:
        changes["mc"] = dataclasses.replace(cfg.mc, **mc_changes)
    cfg = dataclasses.replace(cfg, **changes)
    table = run_report(cfg)
    print(format_table(table, percent=args.percent))
    for note in table.notes:
        print(f"note: {note}", file=sys.stderr)
    print(f"wrote {cfg.output} and {cfg.summary_path}", file=sys.stderr)


def cmd_project(args):
    from .projection import coterminal_specs, project_swap_sabr
    from .tenor import SwapSpec

    curves, params = _load(args.curve, args.model)
    specs = (
        [SwapSpec(args.n, args.m if args.m is not None else curves.tenor.last_index)]
        if args.n is not None
        else coterminal_specs(curves.tenor, args.m)
    )
    out = []
    for s in specs:
        with stage("projection", "project_swap_sabr", f"swaption ({s.n}, {s.m})"):
            p = project_swap_sabr(s, curves, params, nu_mode=args.nu_mode)
        out.append({"n": s.n, "m": s.m, **dataclasses.asdict(p), "alpha_std": p.alpha_std})
    _emit(json.dumps(out, indent=2) + "\n", args.out)


def cmd_price(args):
    from .akrs import akrs_implied_vol, akrs_price
    from .pricers import UncorrelatedSabrParams, black_price, hagan_implied_vol

    p = UncorrelatedSabrParams(args.S0, args.alpha0, args.B, args.nu, args.T)
    lines = ["strike,price,vol"]
    for K in _strikes(args.strikes):
        if args.method == "akrs":
            with stage("pricers", "akrs_price", f"K={K:g}"):
                price, vol = akrs_price(p, K), akrs_implied_vol(p, K)
        else:
            with stage("pricers", "hagan_implied_vol", f"K={K:g}"):
                vol = hagan_implied_vol(p.to_hagan(), p.S0, K, p.expiry)
                price = float(black_price(p.S0, K, vol, p.expiry))
        lines.append(f"{K!r},{price!r},{vol!r}")
    _emit("\n".join(lines) + "\n", args.out)


def cmd_mc(args):
    from .mc import McConfig, bond_martingale, price_swaption_mc, simulate
    from .projection import coterminal_specs

    curves, params = _load(args.curve, args.model)
    cfg = McConfig(num_paths=args.paths, seed=args.seed, step=args.step, workers=args.workers)
    with stage("mc_engine", "simulate"):
        ens = simulate(params, curves, cfg, dump_path=args.dump)
    lines = ["maturity,strike,price,price_se,vol,vol_se"]
    for s in coterminal_specs(curves.tenor):
        T = float(curves.tenor.dates[s.n])
        for K in _strikes(args.strikes):
            try:
                q = price_swaption_mc(ens, s, K)
                lines.append(f"{T!r},{K!r},{q.price!r},{q.price_se!r},{q.vol!r},{q.vol_se!r}")
            except SabrLmmError as exc:
                print(f"note: ({s.n}, {s.m}) K={K:g}: {exc}", file=sys.stderr)
                lines.append(f"{T!r},{K!r},,,,")
    est, se = bond_martingale(ens)
    z = np.abs(est - curves.discounts[1 : ens.n_stop + 1]) / np.where(se > 0, se, np.inf)
    print(f"bond martingale: max |z| = {np.max(z):.3f} over {z.size} dates", file=sys.stderr)
    _emit("\n".join(lines) + "\n", args.out)


def cmd_calibrate(args):
    from .calibration import (
        CoterminalTargets,
        calibrate_coterminal,
        calibrate_spread_corr,
        fit_uncorrelated_sabr,
    )
    from .cms import SpreadSpec
    from .pricers import HaganSabrParams
    from .tenor import SwapSpec, swap_rate_and_annuity

    curves = _load(args.curve)
    if args.kind == "coterm":
        with stage("config", "load_targets"):
            plain, hagan, decay, kind, last = load_targets(args.targets)
        alpha0, beta, nu = [], [], []
        for n in range(1, last + 1):
            if n in plain:
                e = plain[n]
                alpha0.append(e["alpha0"])
                beta.append(e["beta"])
                nu.append(e["nu"])
                continue
            e = hagan[n]
            spec = SwapSpec(n, last)
            F, _ = swap_rate_and_annuity(spec, curves.tenor, curves.fwd, curves.disc)
            with stage("calibration", "fit_uncorrelated_sabr", f"expiry index {n}"):
                h = HaganSabrParams(e["alpha_std"], e["beta"], e["rho"], e["nu"])
                fit = fit_uncorrelated_sabr(h, F, float(curves.tenor.dates[n]))
            alpha0.append(fit.params.alpha0)
            beta.append(fit.params.B)
            nu.append(fit.params.nu)
        with stage("calibration", "calibrate_coterminal"):
            params = calibrate_coterminal(CoterminalTargets(alpha0, beta, nu), curves, decay, kind)
    else:
        curves, params = _load(args.curve, args.model)
        spec = SpreadSpec(args.n, args.a, args.b)
        with stage("calibration", "calibrate_spread_corr"):
            res = calibrate_spread_corr(spec, args.vols, args.spread_vol, curves, params)
        print(f"converged in {res.iterations} iterations; residual {res.residual}", file=sys.stderr)
        params = res.params
    save_model(params, args.out)
    print(f"wrote {args.out}", file=sys.stderr)


def cmd_convert(args):
    from .calibration import fit_uncorrelated_sabr
    from .pricers import HaganSabrParams

    h = HaganSabrParams(args.alpha, args.beta, args.rho, args.nu)
    strikes = None if args.strikes is None else _strikes(args.strikes)
    with stage("calibration", "fit_uncorrelated_sabr"):
        fit = fit_uncorrelated_sabr(h, args.F, args.T, strike_grid=strikes, rms_cap=args.rms_cap)
    out = {**dataclasses.asdict(fit.params), "rms_vol_points": fit.rms, "warning": fit.warning}
    _emit(json.dumps(out, indent=2) + "\n", args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sabrlmm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", help="co-terminal AKRS / Hagan / MC comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--methods", help="comma-separated subset of akrs,hagan,mc")
    p.add_argument("--out", help="report CSV path (summary goes next to it)")
    p.add_argument("--percent", action="store_true", help="print vols in percent")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("project", help="project swaptions onto uncorrelated SABR")
    p.add_argument("--curve", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, help="expiry index (default: all co-terminal)")
    p.add_argument("--m", type=int, help="last Libor index (default: N)")
    p.add_argument("--nu-mode", choices=["exact", "expansion"], default="exact")
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("price", help="price an uncorrelated SABR smile")
    p.add_argument("--S0", type=float, required=True)
    p.add_argument("--alpha0", type=float, required=True, help="initial vol, rate normalisation")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--strikes", help="comma-separated strikes")
    p.add_argument("--method", choices=["akrs", "hagan"], default="akrs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("mc", help="Monte Carlo co-terminal swaption smiles")
    p.add_argument("--curve", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1.0 / 12.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--strikes")
    p.add_argument("--dump", help="CSV path for per-step path states")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("calibrate", help="co-terminal bootstrap or spread correlation fit")
    p.add_argument("kind", choices=["coterm", "spread"])
    p.add_argument("--curve", required=True)
    p.add_argument("--targets", help="targets file (coterm)")
    p.add_argument("--model", help="starting model (spread)")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--vols", type=float, nargs=2, metavar=("VOL_A", "VOL_B"))
    p.add_argument("--spread-vol", type=float)
    p.add_argument("--out", required=True, help="calibrated model JSON")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("convert-sabr", help="Hagan quadruple to uncorrelated SABR")
    p.add_argument("--F", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True, help="market-normalised alpha")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--strikes")
    p.add_argument("--rms-cap", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "calibrate":
        need = ["targets"] if args.kind == "coterm" else ["model", "n", "a", "b", "vols", "spread_vol"]
        missing = [k for k in need if getattr(args, k) is None]
        if missing:
            ap.error(f"calibrate {args.kind} needs --" + ", --".join(m.replace("_", "-") for m in missing))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SabrLmmError as exc:
        print(f"error: [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
