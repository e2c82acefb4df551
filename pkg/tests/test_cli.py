import json

import numpy as np
import pytest

from tdho.cli import main
from tdho.config import ConfigError, config_from_dict, load_config
from tdho.emit import read_series_csv, series_document, csv_text
from tdho.runner import run
from tdho.scenarios import CHECKS, SCENARIOS, list_scenarios

SMALL = {"t0": 0, "t1": 4, "samples": 201}


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


# ----------------------------------------------------------------- config


def test_minimal_config_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path, {"omega_sq": "1", "force": "0", "t0": 0, "t1": 20}))
    assert cfg.integrator.method == "rk45"
    assert cfg.integrator.rtol == cfg.integrator.atol == 1e-10
    assert cfg.hbar == 1.0
    assert cfg.scenario.samples == 2001
    assert cfg.checks == CHECKS
    assert cfg.output_format == "json"


def test_builtin_scenario_by_name():
    cfg = config_from_dict({"scenario": "driven-chirp"})
    assert cfg.source["omega_sq"] == "1 + 0.1*t"
    assert cfg.checks == SCENARIOS["driven-chirp"].checks
    assert cfg.seeds.beta_dot0 == 1


def test_nested_scenario_and_overrides():
    cfg = config_from_dict({
        "scenario": {"omega_sq": "1 + 0.1*t", "force": "sin(t)", "t0": 0, "t1": 5, "samples": 11},
        "seeds": {"beta0": [1, 0.5], "sigma": [0.1, [0, 1]], "ermakov": {"w2": 2.0}},
        "integrator": {"method": "rk4", "h0": 0.001},
        "checks": ["wronskian", "linear_invariant"],
        "thresholds": {"wronskian": 1e-6},
        "hbar": 0.5,
        "output": {"format": "csv", "path": "out"},
    })
    assert cfg.seeds.beta0 == 1 + 0.5j
    assert cfg.seeds.sigma == (0.1, 1j)
    assert cfg.seeds.ermakov.w2 == 2.0 and cfg.seeds.ermakov.rho0 is None
    assert cfg.checks == ("linear_invariant", "wronskian")  # run order, not file order
    assert cfg.thresholds["wronskian"] == 1e-6
    assert cfg.output_path == "out"


@pytest.mark.parametrize("data, field", [
    ({"omega_sq": "sin(", "t0": 0, "t1": 1}, "omega_sq"),
    ({"omega_sq": "1", "force": "x", "t0": 0, "t1": 1}, "force"),
    ({"omega_sq": "1", "t0": 0, "t1": 1, "samples": 1}, "samples"),
    ({"omega_sq": "1", "t0": 2, "t1": 1}, "t1"),
    ({"omega_sq": "1", "t0": 0}, "t1"),
    ({"scenario": "nope"}, "scenario"),
    ({"scenario": "constant", "checks": ["energy"]}, "checks"),
    ({"scenario": "constant", "thresholds": {"wronskian": 0}}, "thresholds.wronskian"),
    ({"scenario": "constant", "thresholds": {"wronskian": -1e-3}}, "thresholds.wronskian"),
    ({"scenario": "constant", "hbar": 0}, "hbar"),
    ({"scenario": "constant", "integrator": {"method": "euler"}}, "integrator"),
    ({"scenario": "constant", "integrator": {"rtol": "tight"}}, "integrator.rtol"),
    ({"scenario": "constant", "seeds": {"beta0": [1, 2, 3]}}, "seeds.beta0"),
    ({"scenario": "constant", "seeds": {"ermakov": {"rho0": -1}}}, "seeds.ermakov.rho0"),
    ({"scenario": "constant", "output": {"format": "xml"}}, "output.format"),
    ({"scenario": "constant", "colour": "red"}, "config"),
    ({"scenario": {"omega_sq": "1", "t0": 0, "t1": 1, "extra": 1}}, "scenario"),
])
def test_config_errors_name_the_field(data, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.field == field


def test_invalid_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"omega_sq": "1",\n  "t0": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


# ----------------------------------------------------------------- scenarios


def test_list_scenarios():
    names = [s.name for s in list_scenarios()]
    assert names == ["constant", "driven-constant", "chirp", "driven-chirp", "pulse", "ermakov-stationary"]
    for s in list_scenarios():
        d = s.to_dict()
        assert d["seeds"] and d["checks"]
    assert "quantum_products" in SCENARIOS["driven-chirp"].checks
    assert SCENARIOS["ermakov-stationary"].seeds["ermakov"]["w2"] == 1.0


def test_list_scenarios_cli(capsys):
    assert main(["list-scenarios", "--json"]) == 0
    entries = json.loads(capsys.readouterr().out)
    assert len(entries) == 6
    assert main(["list-scenarios"]) == 0
    text = capsys.readouterr().out
    assert "driven-chirp" in text and "quantum_products" in text


# ----------------------------------------------------------------- emitters


def test_csv_is_projection_of_json(tmp_path):
    t = np.linspace(0, 1, 5)
    masked = np.ma.MaskedArray(t ** 2, mask=[True, False, False, False, False])
    doc = series_document(t, {"x": np.sin(t) / 3, "z": np.exp(1j * t), "m": masked})
    path = tmp_path / "s.csv"
    path.write_text(csv_text(doc))
    cols = read_series_csv(path)
    assert list(cols) == ["t", "x", "z_re", "z_im", "m"]
    assert cols["x"] == doc["series"]["x"]
    assert cols["z_im"] == doc["series"]["z"]["im"]
    assert cols["m"][0] is None and doc["series"]["m"][0] is None
    with pytest.raises(ValueError):
        series_document(t, {"short": t[:3]})


# ----------------------------------------------------------------- runs


def test_run_builtin_constant_passes(tmp_path):
    cfg = config_from_dict({"scenario": "constant"})
    report = run(cfg, out_dir=tmp_path)
    assert report.passed and report.exit_code == 0, report.summary_lines()
    assert [c.check for c in report.checks] == list(cfg.checks)
    assert (tmp_path / "report.json").exists() and (tmp_path / "series.json").exists()


def test_run_exit_codes(tmp_path, capsys):
    good = write_config(tmp_path, {"scenario": "chirp", **SMALL}, "good.json")
    assert main(["run", str(good), "--out", str(tmp_path / "a")]) == 0

    strict = write_config(tmp_path, {"scenario": "chirp", **SMALL, "thresholds": {"linear_invariant": 1e-20}},
                          "strict.json")
    assert main(["run", str(strict), "--out", str(tmp_path / "b")]) == 1
    doc = json.loads((tmp_path / "b" / "report.json").read_text())
    failing = [c["check"] for c in doc["checks"] if not c["passed"]]
    assert failing == ["linear_invariant"]
    assert "FAIL  linear_invariant" in capsys.readouterr().out

    broken = write_config(tmp_path, {"omega_sq": "sin(", "t0": 0, "t1": 1}, "broken.json")
    assert main(["run", str(broken)]) == 2
    assert "omega_sq" in capsys.readouterr().err


def test_csv_and_json_runs_hold_identical_numbers(tmp_path):
    path = write_config(tmp_path, {"scenario": "driven-chirp", **SMALL})
    assert main(["run", str(path), "--out", str(tmp_path / "j"), "--format", "json"]) == 0
    assert main(["run", str(path), "--out", str(tmp_path / "c"), "--format", "csv"]) == 0
    doc = json.loads((tmp_path / "j" / "series.json").read_text())
    cols = read_series_csv(tmp_path / "c" / "series.csv")
    assert cols["t"] == doc["t"]
    assert cols["q"] == doc["series"]["q"]
    assert cols["beta_re"] == doc["series"]["beta"]["re"]
    assert cols["I_L_im"] == doc["series"]["I_L"]["im"]
    assert cols["I_Q_takayama"] == doc["series"]["I_Q_takayama"]


def test_reports_are_deterministic(tmp_path):
    path = write_config(tmp_path, {"scenario": "pulse", **SMALL})
    for out in ("r1", "r2"):
        assert main(["run", str(path), "--out", str(tmp_path / out)]) == 0
    docs = []
    for out in ("r1", "r2"):
        doc = json.loads((tmp_path / out / "report.json").read_text())
        assert doc.pop("duration_s") >= 0
        docs.append(json.dumps(doc, sort_keys=True))
    assert docs[0] == docs[1]
    assert (tmp_path / "r1" / "series.json").read_bytes() == (tmp_path / "r2" / "series.json").read_bytes()


def test_check_verb_emits_no_series(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    path = write_config(tmp_path, {"scenario": "ermakov-stationary", **SMALL})
    assert main(["check", str(path), "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] and doc["series_files"] == []
    ermakov = next(c for c in doc["checks"] if c["check"] == "ermakov")
    assert [e["name"] for e in ermakov["entries"]] == ["Ermakov invariant", "stationary rho"]
    assert list(tmp_path.iterdir()) == [path]


def test_failed_stage_keeps_partial_output(tmp_path):
    # gamma seeds with W^2 < 0 are fine, but an Ermakov amplitude with W^2 = 0 collapses
    cfg = config_from_dict({
        "omega_sq": "1", "force": "0", "t0": 0, "t1": 4, "samples": 101,
        "checks": ["linear_invariant", "ermakov"],
        "seeds": {"ermakov": {"w2": 0.0, "rho0": 1.0}},
    })
    report = run(cfg, out_dir=tmp_path)
    assert report.failed_at == "rho solve"
    assert "rho reached zero" in report.error
    assert report.exit_code == 1
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["failed_at"] == "rho solve"
    series = json.loads((tmp_path / "series.json").read_text())["series"]
    assert "q" in series and "beta" in series


def test_expression_domain_error_is_reported(tmp_path):
    cfg = config_from_dict({"omega_sq": "1/(t-1)", "t0": 0, "t1": 2, "samples": 11, "checks": ["wronskian"]})
    report = run(cfg)
    assert report.failed_at == "classical evolution"
    assert report.exit_code == 1


def test_summary_marks_failures():
    cfg = config_from_dict({"scenario": "constant", **SMALL, "checks": ["linear_invariant", "quantum_products"],
                            "thresholds": {"linear_invariant": 1e-30}})
    lines = run(cfg).summary_lines()
    assert lines[-1] == "overall: FAIL"
    assert lines[0].startswith("FAIL  linear_invariant")
    assert lines[1].startswith("PASS  quantum_products")
