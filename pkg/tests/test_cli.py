import csv
import json

import pytest

from netcrt import ConfigError
from netcrt.cli import main
from netcrt.config import PRESETS, ExperimentConfig, load_config

SMALL = ["--ensembles", "ER", "--n", "100", "--C", "4", "--null-reps", "30", "--alt-reps", "30",
         "--trial-reps", "10", "--n-perm", "64", "--seed", "5"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- config

def test_config_field_paths():
    with pytest.raises(ConfigError, match=r"config\.gammas\[1\]"):
        ExperimentConfig.from_dict({"gammas": [0.0, 1.5]})
    with pytest.raises(ConfigError, match=r"config\.n\[0\]"):
        ExperimentConfig.from_dict({"n": ["big"]})
    with pytest.raises(ConfigError, match=r"config\.bogus"):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError, match="n=305"):
        ExperimentConfig.from_dict({"ensembles": ["SBM"], "n": [305]})


def test_presets_validate_and_sensitivity_shape():
    for name in PRESETS:
        load_config(preset=name)
    t2 = load_config(preset="sensitivity-desk")
    assert set(t2.n) == {100, 300, 1000} and set(t2.C) == {5, 10, 20}
    assert t2.null_reps == t2.alt_reps == 300
    assert load_config(preset="sensitivity").alt_reps == 3000
    full = load_config(preset="full")
    assert full.null_reps == full.alt_reps == 20000
    assert len(full.gammas) == 11


def test_json_then_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"gammas": [0, 0.25], "p1": 0.2}))
    cfg = load_config(path, overrides={"p1": 0.22, "C": [6]})
    assert cfg.gammas == (0.0, 0.25) and cfg.p1 == 0.22 and cfg.C == (6,)
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(bad)


# ---------------------------------------------------------------- commands

def test_power_rows_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["power", *SMALL, "--gammas", "0,0.5", "--scenarios", "1,2"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    out = rows(a)
    assert [(r["gamma"], r["scenario"]) for r in out] == [("0", "1"), ("0", "2"),
                                                         ("0.5", "1"), ("0.5", "2")]
    assert list(out[0]) == ["ensemble", "infectivity", "gamma", "n", "C", "scenario", "power",
                            "ci_low", "ci_high", "replicates", "stalled"]


def test_power_backends_agree(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["power", *SMALL, "--gammas", "0.2", "--ensembles", "BA"]
    assert main(args + ["--out", str(a), "--backend", "cython"]) == 0
    assert main(args + ["--out", str(b), "--backend", "python"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_power_hayes_band(tmp_path):
    out, hayes = tmp_path / "p.csv", tmp_path / "h.csv"
    assert main(["power", *SMALL, "--out", str(out), "--hayes-out", str(hayes)]) == 0
    row = rows(hayes)[0]
    assert float(row["power_icc_high"]) <= float(row["power_icc_low"])


def test_metrics_and_icc(tmp_path):
    m, i = tmp_path / "m.csv", tmp_path / "i.csv"
    assert main(["metrics", *SMALL, "--gammas", "0,0.9", "--out", str(m)]) == 0
    means = [float(r["mean_log_rr"]) for r in rows(m)]
    # more control infections at gamma 0; the sign reverses past one half
    assert means[0] > 0 > means[1]
    assert main(["icc", *SMALL, "--out", str(i)]) == 0
    assert 0 < float(rows(i)[0]["icc"]) < 0.1


def test_config_error_exit_code(tmp_path, caplog):
    assert main(["power", "--gammas", "2.0"]) == 2
    assert "config.gammas[0]" in caplog.text
    assert main(["power", "--config", str(tmp_path / "missing.json")]) == 2


def test_stall_exit_code(tmp_path):
    args = ["power", *SMALL, "--p0", "0", "--p1", "0", "--out", str(tmp_path / "x.csv")]
    assert main(args) == 3
    assert not (tmp_path / "x.csv").exists()


def test_ode_command(tmp_path):
    out = tmp_path / "ode.csv"
    assert main(["ode", "--gammas", "0,1", "--replicates", "0", "--t-end", "5",
                 "--out", str(out)]) == 0
    got = rows(out)
    assert len(got) == 12 and got[0]["I0_sim_mean"] == ""


def test_fixtures_then_gamma(tmp_path):
    calls, zips, out = tmp_path / "c.csv", tmp_path / "z.csv", tmp_path / "g.csv"
    assert main(["fixtures", "--kind", "cross-only", "--calls-out", str(calls),
                 "--zips-out", str(zips)]) == 0
    assert main(["gamma", "--calls", str(calls), "--zips", str(zips), "--C", "1",
                 "--weighted", "both", "--randomizations", "20", "--out", str(out),
                 "--degrees-out", str(tmp_path / "d.csv")]) == 0
    got = rows(out)
    assert [r["weighted"] for r in got] == ["0", "1"]
    assert all(float(r["mean_gamma"]) == 1.0 for r in got)
    assert (tmp_path / "d.csv").exists()


def test_gamma_missing_zip_is_config_error(tmp_path):
    calls, zips = tmp_path / "c.csv", tmp_path / "z.csv"
    calls.write_text("src,dst,count\na,b,1\n")
    zips.write_text("node,zip\na,1\n")
    assert main(["gamma", "--calls", str(calls), "--zips", str(zips), "--C", "1"]) == 2
