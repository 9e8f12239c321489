import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

from semimart.catalog import PRESETS
from semimart.cli import cmd_addfun, cmd_boundary, cmd_simulate, cmd_verify, main, report_body, run, to_json
from semimart.config import ConfigError, build_problem, load_config, parse_config, preset_config

ROOT = Path(__file__).resolve().parents[1]
DEMOS = ROOT / "demos"


def bm_config(**extra):
    raw = {"schema_version": 1, "interval": {"l": 0, "r": "inf"}, "mu": 0, "sigma": 1, "x0": 1,
           "g": {"value": "sqrt(x)", "dright": "0.5/sqrt(x)", "second_density": "-0.25/(x*sqrt(x))"},
           "nu": {"density": 1}}
    raw.update(extra)
    return raw


def test_bad_file_reports_every_error_at_once():
    with pytest.raises(ConfigError) as info:
        load_config(str(DEMOS / "bad.json"))
    errs = info.value.errors
    assert len(errs) == 6
    paths = " ".join(errs)
    for p in ("$.interval", "$.mu", "$.x0", "$.g.dright", "$.mc.dt"):
        assert p in paths
    assert all(e.startswith("$") for e in errs)


def test_unreadable_and_invalid_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    p = tmp_path / "broken.json"
    p.write_text("{\"interval\": ")
    with pytest.raises(ConfigError) as info:
        load_config(str(p))
    assert "not valid JSON" in str(info.value)


def test_semantic_errors_are_config_errors():
    with pytest.raises(ConfigError):
        parse_config(bm_config(x0=-1))
    with pytest.raises(ConfigError):
        parse_config(bm_config(mc={"dt_schedule": [1e-3, 1e-2]}))
    with pytest.raises(ConfigError):
        parse_config({"schema_version": 1, "preset": "nope"})


@pytest.mark.parametrize("name", ["bessel_half.json", "sin_inv_x.json", "spikes.json"])
def test_demo_files_load(name):
    cfg = load_config(str(DEMOS / name))
    d, g, nu = build_problem(cfg)
    assert d.J.contains(d.x0)


def test_config_and_preset_agree_for_bessel():
    from semimart.classify import classify
    d1, g1, _ = build_problem(load_config(str(DEMOS / "bessel_half.json")))
    d2, g2, _ = PRESETS["bessel-half-stopped"].problem()
    assert classify(d1, g1).verdict == classify(d2, g2).verdict == "Semimartingale"


@pytest.mark.parametrize("preset, code", [("example-4.1", 10), ("sqrt-bm", 0), ("example-4.2", 11),
                                          ("question-II-second-kind", 11)])
def test_classify_exit_codes(preset, code):
    rep, got, text = run(["classify", "--preset", preset])
    assert got == code
    body = json.loads(text)
    assert body["schema_version"] == 1 and body["verdicts"]["semimartingale"]["verdict"] == PRESETS[preset].expected
    assert body["verdicts"]["semimartingale"]["cond_necessary"] is None or \
        "shells" in body["verdicts"]["semimartingale"]["cond_necessary"]


def test_unknown_preset_lists_presets(capsys):
    rep, code, text = run(["classify", "--preset", "nope"])
    assert rep is None and code == 2
    for name in PRESETS:
        assert name in text
    assert main(["classify", "--preset", "nope"]) == 2
    assert "bm-identity" in capsys.readouterr().err


def test_bad_config_exit_code():
    rep, code, text = run(["classify", "--config", str(DEMOS / "bad.json")])
    assert code == 2 and text.count("\n  $") == 6


def test_boundary_command_fills_case_b():
    rep, code = cmd_boundary(parse_config(bm_config()))
    b = rep["verdicts"]["boundary"]
    assert code == 0 and b["case"] == "B" and b["exits_at_l"] == "yes" and b["g_limit_l"] == pytest.approx(0.0)


def test_addfun_command_lebesgue_finite_at_exit():
    rep, code = cmd_addfun(parse_config(bm_config()))
    a = rep["verdicts"]["addfun"]
    assert code == 0
    assert a["verdict_at_exit_l"]["status"] == "Convergent"
    assert "finite" in a["summary"]


def test_verify_bessel_half_agrees():
    rep, code = cmd_verify(preset_config("bessel-half-stopped"))
    assert code == 0
    assert rep["agreement"]["deterministic"] == "Semimartingale"
    assert rep["agreement"]["empirical"] == "Semimartingale-like" and rep["agreement"]["agree"]


def test_simulate_statistics_and_thread_independence():
    cfg = parse_config(bm_config(mc={"paths": 3000, "dt": 1e-3, "horizon": 1.0, "seed": 5}))
    a, _ = cmd_simulate(cfg, threads=1)
    b, _ = cmd_simulate(cfg, threads=3)
    assert to_json(report_body(a)) == to_json(report_body(b))
    assert a["mc"]["absorbed_fraction"] == pytest.approx(2 * 0.1586552539, abs=0.04)
    assert a["provenance"]["seed"] == 5


def test_reports_are_byte_identical_and_json_clean():
    a = to_json(report_body(run(["boundary", "--preset", "sqrt-bm"])[0]))
    b = to_json(report_body(run(["boundary", "--preset", "sqrt-bm"])[0]))
    assert a == b
    body = json.loads(a)
    assert body["verdicts"]["boundary"]["s_r"] == "inf"
    assert "timings" not in body


def test_text_format_and_out_file(tmp_path):
    out = tmp_path / "rep.txt"
    assert main(["classify", "--preset", "sqrt-bm", "--format", "text", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("classify: sqrt-bm") and "verdict: Semimartingale" in text
    out2 = tmp_path / "rep.json"
    assert main(["boundary", "--preset", "sqrt-bm", f"--out={out2}"]) == 0
    assert json.loads(out2.read_text())["command"] == "boundary"


def test_console_entry_point_runs_as_module():
    env = dict(os.environ, PYTHONPATH=str(ROOT / "src"))
    p = subprocess.run([sys.executable, "-m", "semimart.cli", "classify", "--preset", "example-4.1"],
                       capture_output=True, text=True, env=env, timeout=120)
    assert p.returncode == 10
    assert json.loads(p.stdout)["verdicts"]["semimartingale"]["verdict"] == "NonSemiFirstKind"


def test_every_preset_has_a_documented_verdict():
    assert len(PRESETS) == 10
    for p in PRESETS.values():
        assert p.expected in ("Semimartingale", "NonSemiFirstKind", "NonSemiSecondKind")
        assert not math.isnan(p.problem()[0].x0)
