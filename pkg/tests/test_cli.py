from __future__ import annotations

import copy
import json

import pytest

from bplab.cli import main
from bplab.config import ConfigError, parse_config
from bplab.records import ReplayMismatch, WitnessMissing
from bplab.runner import dumps, load_records, replay_record, run
from bplab.suites import SUITES

SMALL = """\
seed: 5
group: {family: cyclic, n: 2}
p: 2.0
suites:
  dinf: {instances: 3}
"""


def _write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def small_report(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    cfg = _write(d, SMALL)
    assert main(["run", cfg, "--out", str(d / "out"), "--quiet"]) == 0
    return d / "out" / "report.json"


def test_run_small_config_all_pass(small_report):
    report = json.loads(small_report.read_text())
    assert report["summary"] == {"dinf": {"PASS": 3, "FAIL": 0, "INCONCLUSIVE": 0}}
    assert (small_report.parent / "report.txt").exists()
    assert (small_report.parent / "report.timings.json").exists()


def test_p_gate_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL.replace("p: 2.0", "p: 1"))
    assert main(["run", cfg, "--out", str(tmp_path)]) == 2
    assert "p must lie in (1, ∞)" in capsys.readouterr().err


def test_config_errors_name_field_and_line():
    with pytest.raises(ConfigError, match="unknown suite 'nope'") as e:
        parse_config(SMALL.replace("dinf: {instances: 3}", "nope: {}"))
    assert e.value.line == 5
    with pytest.raises(ConfigError) as e:
        parse_config(SMALL.replace("p: 2.0", "p: [2.0, 0.5]"))
    assert e.value.path == "p[1]" and e.value.line == 3
    with pytest.raises(ConfigError, match="seed is required"):
        parse_config(SMALL.replace("seed: 5\n", ""))
    with pytest.raises(ConfigError, match="unknown parameter"):
        parse_config(SMALL.replace("instances: 3", "instanses: 3"))
    with pytest.raises(ConfigError, match="r_max"):
        parse_config(SMALL + "r_max: 0\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        parse_config("seed: [1\n")


def test_seed_override_and_sweep():
    cfg = parse_config(SMALL.replace("p: 2.0", "p: [1.5, 3.0]"), seed=9)
    assert cfg.seed == 9 and len(cfg.settings()) == 2


def test_same_config_twice_is_byte_identical():
    cfg = parse_config(SMALL)
    a, _ = run(cfg)
    b, _ = run(cfg)
    assert dumps(a) == dumps(b)


def test_thread_count_does_not_change_report():
    cfg = parse_config(SMALL)
    a, _ = run(cfg, threads=1)
    b, _ = run(cfg, threads=2)
    assert dumps(a) == dumps(b)


def test_replay_pass(small_report, capsys):
    assert main(["replay", str(small_report)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and all(line.endswith("PASS") for line in lines)


def test_replay_single_record_file(small_report, tmp_path):
    rec = load_records(small_report)[0]
    path = tmp_path / "one.json"
    path.write_text(json.dumps(rec))
    assert main(["replay", str(path)]) == 0
    assert main(["replay", str(small_report), "--check", rec["check"]]) == 0
    assert main(["replay", str(small_report), "--check", "nope"]) == 2


def test_replay_detects_perturbed_witness(small_report, tmp_path, capsys):
    rec = copy.deepcopy(load_records(small_report)[0])
    node = rec["estimates"]["sum"]["replay_lower"]
    node["witness"][0][0] += 0.1
    with pytest.raises(ReplayMismatch):
        replay_record(rec)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(rec))
    assert main(["replay", str(path)]) == 1
    assert "ReplayMismatch" in capsys.readouterr().out


def test_replay_missing_witness(small_report, tmp_path):
    rec = copy.deepcopy(load_records(small_report)[0])
    for q in rec["estimates"].values():
        q.pop("replay_lower", None)
        q.pop("replay_upper", None)
    with pytest.raises(WitnessMissing):
        replay_record(rec)
    path = tmp_path / "stripped.json"
    path.write_text(json.dumps(rec))
    assert main(["replay", str(path)]) == 2


def test_replay_preserves_inconclusive(small_report):
    # a record whose stored bracket for one side is too wide to decide equality
    rec = copy.deepcopy(load_records(small_report)[0])
    q = rec["estimates"]["sum"]
    q["upper"] = q["certified_upper"] = q["lower"] * 1.01 + 0.01
    rec["verdict"] = "INCONCLUSIVE"
    assert replay_record(rec).value == "INCONCLUSIVE"
    rec["verdict"] = "PASS"
    with pytest.raises(ReplayMismatch):
        replay_record(rec)


def test_list_suites(capsys):
    assert main(["list-suites"]) == 0
    out = capsys.readouterr().out
    for name in ("dinf", "mp", "monotonicity", "universal_gap", "amplified_isometry", "duality",
                 "cb_functional", "p2_oracle"):
        assert name in SUITES and name in out


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "bplab", "list-suites"], capture_output=True, text=True)
    assert res.returncode == 0 and "dinf" in res.stdout
