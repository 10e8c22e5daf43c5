import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import DESK
from sabrlmm.cli import main
from sabrlmm.config import (
    DEFAULT_METHODS,
    DEFAULT_STRIKES,
    load_config,
    load_curves,
    load_model,
    load_targets,
    model_to_dict,
    save_model,
)
from sabrlmm.errors import ConfigError
from sabrlmm.mc import McConfig
from sabrlmm.model import LmmParams
from sabrlmm.report import (
    ReportError,
    ReportTable,
    round_sig,
    run_report,
    summary_to_csv,
    table_from_csv,
    table_to_csv,
)


@pytest.fixture
def workdir(tmp_path):
    for name in ("curve.json", "model.json", "zero_vol_model.json"):
        shutil.copy(DESK / name, tmp_path / name)
    return tmp_path


def write_config(path, **entries):
    data = {"curve": "curve.json", "model": "model.json", **entries}
    path.write_text(json.dumps(data))
    return path


# --------------------------------------------------------------------------- config


def test_minimal_config_defaults(workdir):
    cfg = load_config(write_config(workdir / "run.json"))
    assert cfg.methods == DEFAULT_METHODS
    assert cfg.strikes == DEFAULT_STRIKES
    assert cfg.strikes[0] == 0.005 and cfg.strikes[-1] == 0.019 and len(cfg.strikes) == 15
    assert cfg.last_index is None and cfg.nu_mode == "exact" and cfg.seed == 0
    assert cfg.mc == McConfig()
    assert cfg.output == workdir / "report.csv"
    assert cfg.summary_path == workdir / "report_summary.csv"
    assert cfg.curve_path == workdir / "curve.json"


def test_unknown_key_is_named(workdir):
    with pytest.raises(ConfigError, match="pathz"):
        load_config(write_config(workdir / "run.json", pathz="x"))


def test_unknown_nested_key_is_named(workdir):
    with pytest.raises(ConfigError, match="num_path"):
        load_config(write_config(workdir / "run.json", mc={"num_path": 10}))


def test_descending_strikes_rejected(workdir):
    with pytest.raises(ConfigError, match="ascending"):
        load_config(write_config(workdir / "run.json", strikes=[0.02, 0.01]))


def test_wrong_type_is_reported(workdir):
    with pytest.raises(ConfigError, match="seed"):
        load_config(write_config(workdir / "run.json", seed="zero"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.json")


def test_curve_from_discounts(tmp_path):
    d = [1.0, 0.99, 0.98]
    (tmp_path / "c.json").write_text(json.dumps({"dates": [0.0, 0.5, 1.0], "discounts": d}))
    curves = load_curves(tmp_path / "c.json")
    assert curves.forwards[0] == pytest.approx((1 / 0.99 - 1) / 0.5, rel=1e-15)
    np.testing.assert_allclose(curves.discounts, d, rtol=1e-15)


def test_model_file_round_trip(tmp_path, desk_curves):
    g = [0.0] + [[0.001 + 1e-4 * l for l in range(i)] for i in range(1, 30)]
    p = LmmParams.build(desk_curves.tenor, g, 0.3, [0.1 + 0.01 * i for i in range(30)], 0.05)
    save_model(p, tmp_path / "m.json")
    q = load_model(tmp_path / "m.json", desk_curves.tenor)
    for name in ("g", "nu", "skew", "corr_decay"):
        np.testing.assert_array_equal(getattr(p, name), getattr(q, name))
    assert model_to_dict(q)["local_vol"] == "CEV"


def test_targets_must_cover_every_expiry(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"corr_decay": 0.05, "targets": [{"n": 1, "alpha0": 0.001, "beta": 0.1, "nu": 0.2},
                                                              {"n": 3, "alpha0": 0.001, "beta": 0.1, "nu": 0.2}]}))
    with pytest.raises(ConfigError, match="exactly once"):
        load_targets(path)


# --------------------------------------------------------------------------- report


@pytest.fixture(scope="module")
def analytic_table(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("analytic")
    for name in ("curve.json", "model.json"):
        shutil.copy(DESK / name, tmp / name)
    return run_report(load_config(write_config(tmp / "run.json", methods=["akrs", "hagan"])))


def test_analytic_report_shape(analytic_table):
    t = analytic_table
    assert t.methods == ("akrs", "hagan")
    assert t.vols["akrs"].shape == (29, 15) and t.mc_se is None
    np.testing.assert_allclose(t.maturities, 0.5 * np.arange(1, 30))
    np.testing.assert_allclose(t.forwards, 0.013, rtol=1e-12)
    assert np.all(t.vols["akrs"] > 0) and np.all(t.vols["hagan"] > 0)


def test_hagan_gap_grows_with_maturity(analytic_table):
    gap = analytic_table.summary()[("akrs", "hagan")]
    assert gap[-1] > 4 * gap[0]
    # long expiries, lowest strike: Hagan above the exact value
    assert analytic_table.vols["hagan"][-1, 0] > analytic_table.vols["akrs"][-1, 0]


def test_vols_rounded_to_six_digits(analytic_table):
    v = analytic_table.vols["akrs"].ravel()
    assert all(round_sig(x) == x for x in v)


def test_csv_round_trip(analytic_table):
    back = table_from_csv(table_to_csv(analytic_table))
    assert back.equals(analytic_table)
    assert table_to_csv(back) == table_to_csv(analytic_table)


def test_csv_keeps_empty_cells():
    vols = {"akrs": np.array([[0.1, 0.2]]), "mc": np.array([[np.nan, 0.21]])}
    t = ReportTable(np.array([0.5]), np.array([0.013]), np.array([0.01, 0.02]), vols, np.array([[np.nan, 0.001]]))
    text = table_to_csv(t)
    assert text.splitlines()[0] == "maturity,forward,akrs@0.01,akrs@0.02,mc@0.01,mc@0.02,mc_se@0.01,mc_se@0.02"
    assert ",," in text
    assert table_from_csv(text).equals(t)


def test_summary_equals_recomputed_errors(analytic_table):
    rows = [line.split(",") for line in summary_to_csv(analytic_table).splitlines()]
    assert rows[0] == ["maturity", "mae_akrs_hagan"]
    diff = np.abs(analytic_table.vols["akrs"] - analytic_table.vols["hagan"]).mean(axis=1)
    np.testing.assert_array_equal(np.array([float(r[1]) for r in rows[1:]]), diff)


def test_report_deterministic_across_workers(workdir):
    base = dict(methods=["akrs", "mc"], last_index=8, strikes=[0.008, 0.013, 0.018])
    one = write_config(workdir / "one.json", output="one.csv", mc={"num_paths": 1000}, **base)
    many = write_config(workdir / "many.json", output="many.csv", mc={"num_paths": 1000, "workers": 3}, **base)
    run_report(load_config(one))
    run_report(load_config(many), workers=1)
    again = run_report(load_config(one))
    assert (workdir / "one.csv").read_bytes() == (workdir / "many.csv").read_bytes()
    assert (workdir / "one_summary.csv").read_bytes() == (workdir / "many_summary.csv").read_bytes()
    assert table_to_csv(again) == (workdir / "one.csv").read_text()


def test_zero_vol_report_rejected(workdir):
    cfg = load_config(write_config(workdir / "run.json", model="zero_vol_model.json", methods=["akrs"]))
    with pytest.raises(ReportError, match=r"\[projection\.project_swap_sabr\].*price at intrinsic"):
        run_report(cfg, write=False)


# --------------------------------------------------------------------------- CLI


def test_cli_report(workdir, capsys):
    cfg = write_config(workdir / "run.json", methods=["akrs", "hagan"], last_index=3)
    assert main(["report", "--config", str(cfg), "--percent"]) == 0
    out = capsys.readouterr().out
    assert "[akrs]" in out and "[hagan]" in out
    assert (workdir / "report.csv").exists() and (workdir / "report_summary.csv").exists()


def test_cli_error_exit(workdir, capsys):
    cfg = write_config(workdir / "run.json", model="zero_vol_model.json", methods=["akrs"])
    assert main(["report", "--config", str(cfg)]) == 2
    assert "[projection.project_swap_sabr]" in capsys.readouterr().err


def test_cli_config_error_names_module(workdir, capsys):
    cfg = write_config(workdir / "run.json", pathz=1)
    assert main(["report", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "[config.load_config]" in err and "pathz" in err


def test_cli_project(workdir):
    out = workdir / "proj.json"
    args = ["project", "--curve", str(workdir / "curve.json"), "--model", str(workdir / "model.json")]
    assert main(args + ["--n", "29", "--out", str(out)]) == 0
    row = json.loads(out.read_text())[0]
    assert row["n"] == 29 and row["B"] == pytest.approx(0.15) and row["alpha0"] == pytest.approx(0.0013)


def test_cli_price(tmp_path):
    out = tmp_path / "p.csv"
    args = ["price", "--S0", "0.013", "--alpha0", "0.0125", "--B", "0.15", "--nu", "0.3", "--T", "5"]
    assert main(args + ["--strikes", "0.01,0.013", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "strike,price,vol" and len(lines) == 3
    assert main(args + ["--method", "hagan", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 16


def test_cli_mc(workdir, capsys):
    out = workdir / "mc.csv"
    args = ["mc", "--curve", str(workdir / "curve.json"), "--model", str(workdir / "model.json")]
    assert main(args + ["--paths", "200", "--strikes", "0.013", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 30
    assert "bond martingale" in capsys.readouterr().err


def test_cli_calibrate_coterm(tmp_path):
    curve = tmp_path / "c.json"
    curve.write_text(json.dumps({"maturity": 2.0, "forwards": 0.013}))
    targets = tmp_path / "t.json"
    targets.write_text(json.dumps({
        "corr_decay": 0.05,
        "targets": [{"n": n, "alpha0": 0.0013, "beta": 0.15, "nu": 0.3} for n in (1, 2, 3)],
    }))
    out = tmp_path / "m.json"
    assert main(["calibrate", "coterm", "--curve", str(curve), "--targets", str(targets), "--out", str(out)]) == 0
    model = json.loads(out.read_text())
    assert model["g"][3] == pytest.approx(0.0013, rel=1e-6)


def test_cli_coterm_recovers_desk_model_into_new_directory(tmp_path, desk_curves):
    out = tmp_path / "new" / "dir" / "model.json"
    args = ["calibrate", "coterm", "--curve", str(DESK / "curve.json"), "--targets", str(DESK / "targets.json")]
    assert main(args + ["--out", str(out)]) == 0
    got = load_model(out, desk_curves.tenor)
    want = load_model(DESK / "model.json", desk_curves.tenor)
    for name in ("g", "nu", "skew"):
        np.testing.assert_allclose(getattr(got, name), getattr(want, name), rtol=1e-9, atol=1e-14)


def test_cli_mc_dump_into_new_directory(workdir):
    dump = workdir / "deep" / "paths.csv"
    args = ["mc", "--curve", str(workdir / "curve.json"), "--model", str(workdir / "model.json")]
    assert main(args + ["--paths", "4", "--dump", str(dump), "--out", str(workdir / "mc.csv")]) == 0
    assert dump.read_text().startswith("step,path,L0")


def test_cli_calibrate_spread(workdir):
    out = workdir / "m2.json"
    args = ["calibrate", "spread", "--curve", str(workdir / "curve.json"), "--model", str(workdir / "model.json"),
            "--n", "6", "--a", "2", "--b", "10", "--vols", "0.1", "0.097", "--spread-vol", "0.00045", "--out", str(out)]
    assert main(args) == 0
    assert json.loads(out.read_text())["corr_decay"] != 0.05


def test_cli_calibrate_needs_arguments(workdir):
    with pytest.raises(SystemExit):
        main(["calibrate", "spread", "--curve", str(workdir / "curve.json"), "--out", "x.json"])


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sabrlmm.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "convert-sabr" in proc.stdout


def test_cli_convert_sabr(tmp_path):
    out = tmp_path / "fit.json"
    args = ["convert-sabr", "--F", "0.013", "--T", "1", "--alpha", "0.05", "--beta", "0.5", "--rho", "0.0",
            "--nu", "0.3", "--strikes", "0.009,0.011,0.013,0.016,0.02", "--out", str(out)]
    assert main(args) == 0
    fit = json.loads(out.read_text())
    assert fit["warning"] is None and fit["rms_vol_points"] < 0.5
    assert fit["alpha0"] == pytest.approx(0.05 * 0.013**0.5, rel=0.01)
