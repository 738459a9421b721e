"""Command-line interface: subcommands, outputs, exit codes."""

import json

import numpy as np

from proxsc import SimDesign, generate
from proxsc.cli import main

from conftest import write_long_csv


def _export_sim_panel(tmp_path, design):
    d, _ = generate(design)
    data = tmp_path / "panel.csv"
    roles = tmp_path / "roles.json"
    d.export(data)
    roles.write_text(json.dumps({
        "treated": d.treated_name,
        "donors": d.donor_names,
        "proxies": d.proxy_names,
    }))
    return data, roles, d


def test_fit_smoke(tmp_path, capsys):
    data, roles, d = _export_sim_panel(tmp_path, SimDesign(r=1, t0=100, t1=100, seed=1))
    out = tmp_path / "out"
    rc = main(["fit", "--data", str(data), "--roles", str(roles),
               "--t0", "100", "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    row = next(r for r in summary["parameters"]["hc"] if r["param"] == "tau")
    assert abs(row["estimate"] - 2.0) < 3 * row["se"]
    assert (out / "parameters.txt").exists()
    assert (out / "effect_series.csv").exists()
    assert (out / "residuals.csv").exists()


def test_fit_outputs_deterministic(tmp_path):
    data, roles, _ = _export_sim_panel(tmp_path, SimDesign(r=1, t0=60, t1=60, seed=2))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    for out in (out1, out2):
        assert main(["fit", "--data", str(data), "--roles", str(roles),
                     "--t0", "60", "--out", str(out)]) == 0
    for name in ("summary.json", "parameters.txt", "effect_series.csv", "residuals.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_under_identified_exit(tmp_path, capsys):
    rng = np.random.default_rng(3)
    units = ["A", "B", "C", "D"]       # 2 donors, 1 proxy
    out = rng.standard_normal((20, 4))
    write_long_csv(tmp_path / "p.csv", units, np.arange(1, 21), out)
    (tmp_path / "roles.json").write_text(json.dumps(
        {"treated": "A", "donors": ["B", "C"], "proxies": ["D"]}))
    rc = main(["fit", "--data", str(tmp_path / "p.csv"),
               "--roles", str(tmp_path / "roles.json"), "--t0", "10",
               "--out", str(tmp_path / "out")])
    assert rc != 0
    err = capsys.readouterr().err
    assert "under-identified: 1 instruments for 2 weights" in err


def test_simulate_table(tmp_path):
    design = tmp_path / "design.json"
    design.write_text(json.dumps({"r": 1, "t0": 50, "t1": 50, "seed": 4}))
    out = tmp_path / "mc"
    rc = main(["simulate", "--design", str(design), "--estimators", "pi,ols",
               "--reps", "10", "--out", str(out)])
    assert rc == 0
    table = (out / "mc_results.tsv").read_text().splitlines()
    header = table[0].split("\t")
    assert {"estimator", "bias", "mc_sd", "coverage_hc", "coverage_hac"} <= set(header)
    assert len(table) == 3        # header + one row per estimator


def test_placebo_report_written(tmp_path):
    data, roles, _ = _export_sim_panel(tmp_path, SimDesign(r=1, t0=100, t1=50, seed=5))
    out = tmp_path / "pl"
    rc = main(["placebo", "--data", str(data), "--roles", str(roles),
               "--t0", "100", "--pseudo-t0", "60", "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "placebo_summary.json").read_text())
    assert summary["pseudo_t0"] == 60
    assert (out / "placebo.txt").exists()


def test_conformal_interval_table(tmp_path):
    data, roles, _ = _export_sim_panel(tmp_path, SimDesign(r=1, t0=80, t1=1, seed=6))
    out = tmp_path / "cf"
    rc = main(["conformal", "--data", str(data), "--roles", str(roles),
               "--t0", "80", "--post-period", "81", "--out", str(out)])
    assert rc == 0
    lines = (out / "conformal_intervals.csv").read_text().splitlines()
    assert lines[0].startswith("post_period")
    assert len(lines) == 2


def test_report_prints_saved_fit(tmp_path, capsys):
    data, roles, _ = _export_sim_panel(tmp_path, SimDesign(r=1, t0=60, t1=60, seed=7))
    out = tmp_path / "out"
    main(["fit", "--data", str(data), "--roles", str(roles),
          "--t0", "60", "--out", str(out)])
    capsys.readouterr()
    assert main(["report", "--out", str(out)]) == 0
    assert "tau" in capsys.readouterr().out


def test_config_file_overridden_by_flags(tmp_path):
    data, roles, _ = _export_sim_panel(tmp_path, SimDesign(r=1, t0=60, t1=60, seed=8))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"estimator": "ols", "t0": 60,
                               "data": str(data), "roles": str(roles)}))
    out = tmp_path / "out"
    rc = main(["fit", "--config", str(cfg), "--estimator", "pi-joint",
               "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["estimator"] == "pi-joint"


def test_missing_data_args_exit(capsys):
    rc = main(["fit"])
    assert rc != 0
    assert "error" in capsys.readouterr().err
