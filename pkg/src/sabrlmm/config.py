"""JSON input files: validation against the bundled schemas and conversion to model objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError, SabrLmmError
from .mc import McConfig
from .model import LmmParams, LocalVolKind
from .tenor import DiscountCurve, ForwardCurve, MarketCurves, TenorStructure

DEFAULT_STRIKES = tuple(round(0.005 + 0.001 * k, 10) for k in range(15))
DEFAULT_METHODS = ("akrs", "hagan", "mc")


def _schema(name: str) -> dict:
    text = resources.files("sabrlmm").joinpath(f"schemas/{name}.schema.json").read_text()
    return json.loads(text)


def _read(path, schema: str) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    validate(data, schema, source=str(path))
    return data


def validate(data, schema: str, source: str = "<input>") -> None:
    validator = jsonschema.Draft202012Validator(_schema(schema))
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "(top level)"
        raise ConfigError(f"{source}: {where}: {err.message}")


def curves_from_dict(data: dict, source: str = "<curve>") -> MarketCurves:
    validate(data, "curve", source)
    try:
        if "dates" in data:
            tenor = TenorStructure(data["dates"], data.get("accrual_flt"), data.get("accrual_fix"))
        else:
            base = TenorStructure.regular(data["maturity"], data.get("frequency", 2))
            tenor = TenorStructure(base.dates, data.get("accrual_flt"), data.get("accrual_fix"))
        if "forwards" in data:
            fwd = np.broadcast_to(np.asarray(data["forwards"], float), (tenor.n_periods,))
            disc = DiscountCurve(data["discounts"]) if "discounts" in data else None
            return MarketCurves(tenor, ForwardCurve(fwd), disc)
        disc = DiscountCurve(data["discounts"])
        d = disc.discounts
        return MarketCurves(tenor, ForwardCurve((d[:-1] / d[1:] - 1.0) / tenor.accrual_flt), disc)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    except SabrLmmError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def model_from_dict(data: dict, tenor: TenorStructure, source: str = "<model>") -> LmmParams:
    validate(data, "model", source)
    try:
        return LmmParams.build(
            tenor,
            data["g"],
            data["nu"],
            data["skew"],
            data["corr_decay"],
            LocalVolKind(data.get("local_vol", "CEV")),
        )
    except (SabrLmmError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_curves(path) -> MarketCurves:
    return curves_from_dict(_read(path, "curve"), str(path))


def load_model(path, tenor: TenorStructure) -> LmmParams:
    return model_from_dict(_read(path, "model"), tenor, str(path))


def model_to_dict(params: LmmParams) -> dict:
    """Per-Libor lists of interval values; constant rows collapse to a scalar."""

    def rows(arr):
        out = []
        for i in range(params.n_libors):
            vals = arr[i, :i]
            if vals.size and np.all(vals == vals[0]):
                out.append(float(vals[0]))
            elif vals.size:
                out.append([float(v) for v in vals])
            else:
                out.append(0.0)
        return out

    decay = params.corr_decay
    return {
        "g": rows(params.g),
        "nu": rows(params.nu),
        "skew": rows(params.skew),
        "corr_decay": float(decay[0]) if np.all(decay == decay[0]) else [float(x) for x in decay],
        "local_vol": params.local_vol_kind.value,
    }


def save_model(params: LmmParams, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(model_to_dict(params), indent=2) + "\n")


@dataclass(frozen=True)
class RunConfig:
    curve_path: Path
    model_path: Path
    methods: tuple = DEFAULT_METHODS
    strikes: tuple = DEFAULT_STRIKES
    last_index: int | None = None
    nu_mode: str = "exact"
    seed: int = 0
    output: Path = Path("report.csv")
    summary_output: Path | None = None
    mc: McConfig = field(default_factory=McConfig)

    @property
    def summary_path(self) -> Path:
        if self.summary_output is not None:
            return self.summary_output
        return self.output.with_name(self.output.stem + "_summary.csv")


def load_config(path) -> RunConfig:
    """Validated run configuration with defaults applied; unknown keys are rejected."""
    path = Path(path)
    data = _read(path, "run")
    base = path.parent
    strikes = tuple(float(k) for k in data.get("strikes", DEFAULT_STRIKES))
    if any(b <= a for a, b in zip(strikes, strikes[1:])):
        raise ConfigError(f"{path}: strikes: strike grid must be strictly ascending, got {list(strikes)}")
    seed = int(data.get("seed", 0))
    mc_data = dict(data.get("mc", {}))
    try:
        mc = McConfig(seed=seed, **mc_data)
    except SabrLmmError as exc:
        raise ConfigError(f"{path}: mc: {exc}") from exc
    summary = data.get("summary_output")
    return RunConfig(
        curve_path=base / data["curve"],
        model_path=base / data["model"],
        methods=tuple(data.get("methods", DEFAULT_METHODS)),
        strikes=strikes,
        last_index=data.get("last_index"),
        nu_mode=data.get("nu_mode", "exact"),
        seed=seed,
        output=base / data.get("output", "report.csv"),
        summary_output=None if summary is None else base / summary,
        mc=mc,
    )


def load_targets(path):
    """Targets file as ``(entries, hagan_entries, corr_decay, local_vol, last_index)``."""
    data = _read(path, "targets")
    plain = {e["n"]: e for e in data.get("targets", [])}
    hagan = {e["n"]: e for e in data.get("hagan", [])}
    both = set(plain) & set(hagan)
    if both:
        raise ConfigError(f"{path}: expiries {sorted(both)} appear in both 'targets' and 'hagan'")
    ns = sorted(set(plain) | set(hagan))
    last = data.get("last_index", ns[-1] if ns else 0)
    if ns != list(range(1, last + 1)):
        raise ConfigError(f"{path}: targets must cover expiry indices 1..{last} exactly once, got {ns}")
    return plain, hagan, data["corr_decay"], LocalVolKind(data.get("local_vol", "CEV")), last
