"""Strict config parsing, canonical hashing, and the CLI contract."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from skewcrit.configio import (
    canonical_json,
    config_hash,
    load_config,
    parse_config,
    serialize_config,
)
from skewcrit.errors import ConfigError
from skewcrit.registry import example_names, example_raw


def _run(*args, env=None):
    cmd = [sys.executable, "-m", "skewcrit.cli", *args]
    return subprocess.run(cmd, capture_output=True, text=True, env=env, timeout=300)


def _doc():
    return example_raw("trivial")


def test_every_registry_example_round_trips_through_serialization():
    for name in example_names():
        raw = example_raw(name)
        cfg = parse_config(raw)
        again = parse_config(serialize_config(cfg))
        assert serialize_config(cfg) == serialize_config(again), name
        assert config_hash(cfg) == config_hash(again), name


def test_unknown_keys_are_rejected():
    doc = _doc()
    doc["extra"] = 1
    with pytest.raises(ConfigError):
        parse_config(doc)
    doc = _doc()
    doc["solver"] = {"tol_residual": 1e-12, "mystery": True}
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_dimension_mismatches_are_rejected():
    doc = _doc()
    doc["alpha"] = ["x1"]
    with pytest.raises(ConfigError):
        parse_config(doc)
    doc = _doc()
    doc["delta"] = [["0", "0"]]
    with pytest.raises(ConfigError):
        parse_config(doc)
    doc = _doc()
    doc["experiment"]["x0"] = [0.1]
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_version_and_expression_errors_are_config_errors():
    doc = _doc()
    doc["version"] = 99
    with pytest.raises(ConfigError):
        parse_config(doc)
    doc = _doc()
    doc["alpha"] = ["x1 +", "x2"]
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_problem_block_is_all_or_none():
    doc = _doc()
    del doc["g"]
    with pytest.raises(ConfigError):
        parse_config(doc)
    # no problem and no custom section: nothing to run
    with pytest.raises(ConfigError):
        parse_config({"version": 1, "name": "empty"})


def test_family_fields_require_a_problem():
    doc = {
        "version": 1,
        "name": "floating",
        "alpha2": ["x1", "x2"],
        "custom": {
            "kind": "map_pair",
            "in_dim": 1,
            "f1": ["x1"],
            "f2": ["x1 + t^2"],
        },
    }
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_graph_pair_customs_need_a_box():
    doc = {
        "version": 1,
        "name": "boxless",
        "custom": {
            "kind": "graph_pair",
            "in_dim": 1,
            "f1": ["x1", "x1"],
            "f2": ["x1", "x1 + t^2"],
        },
    }
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_config_hash_tracks_content_not_formatting():
    doc = _doc()
    h1 = config_hash(parse_config(doc))
    doc_reordered = dict(reversed(list(doc.items())))
    h2 = config_hash(parse_config(doc_reordered))
    assert h1 == h2
    doc["experiment"]["y"] = [0.8]
    assert config_hash(parse_config(doc)) != h1


def test_canonical_json_is_sorted_and_rejects_nan():
    text = canonical_json({"b": 1, "a": [1.5, 2]})
    assert text == '{"a":[1.5,2],"b":1}'
    with pytest.raises(ValueError):
        canonical_json({"v": float("nan")})


def test_loading_a_missing_or_broken_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_cli_solve_prints_the_root_and_exits_zero(tmp_path):
    out = tmp_path / "report.json"
    proc = _run("solve", "trivial", "--y", "0.7", "--out", str(out), "--no-timestamp")
    assert proc.returncode == 0, proc.stderr
    assert "x_c = (0.69999999999999996, 0)" in proc.stdout
    report = json.loads(out.read_text())
    assert report["command"] == "solve"
    assert report["results"]["converged"] is True
    assert "report_hash" in report and "timestamp" not in report


def test_cli_solve_on_a_degenerate_problem_exits_three():
    proc = _run("solve", "degenerate", "--y", "0.4")
    assert proc.returncode == 3
    assert "DegenerateHessian" in proc.stderr


def test_cli_unknown_example_exits_two():
    proc = _run("solve", "no-such-config")
    assert proc.returncode == 2
    assert "config error" in proc.stderr


def test_cli_continue_rejects_family_configs():
    proc = _run(
        "continue", "trivial-alpha-perturbed", "--y-from", "0", "--y-to", "1",
        "--steps", "3",
    )
    assert proc.returncode == 2
    assert "continuation requires a single problem" in proc.stderr


def test_cli_continue_writes_a_plain_decimal_csv(tmp_path):
    out = tmp_path / "path.csv"
    proc = _run(
        "continue", "trivial", "--y-from=-1", "--y-to=1", "--steps=5",
        "--x0=-1,0.2", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "y1,x1,x2,cond,converged"
    assert len(lines) == 6
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == 5
        y, x1, x2, cond, converged = cells
        assert converged == "true"
        assert abs(float(x1) - float(y)) < 1e-10
        assert abs(float(x2)) < 1e-10
    # '.' is the decimal mark; no locale separators anywhere
    assert ";" not in out.read_text()


def test_cli_contact_reports_data_slopes(tmp_path):
    out = tmp_path / "contact.json"
    proc = _run(
        "contact", "trivial-alpha-perturbed", "--what", "alpha", "--out", str(out),
        "--no-timestamp",
    )
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
    report = json.loads(out.read_text())
    assert abs(report["results"]["slope"] - 2.0) < 0.05
    assert report["checks"][0]["passed"] is True


def test_cli_contact_gamma_on_identical_family_is_machine_limited():
    proc = _run("contact", "trivial-identical", "--what", "gamma")
    assert proc.returncode == 0, proc.stderr
    assert "machine-limited" in proc.stdout


def test_cli_predict_residual_passes_on_builtin_families():
    proc = _run("predict-residual", "trivial-delta-perturbed")
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
    assert "predicted u" in proc.stdout


def test_cli_verify_solver_suite_exits_zero():
    proc = _run("verify", "--suite", "solver")
    assert proc.returncode == 0, proc.stderr
    assert "FAIL" not in proc.stdout


def test_cli_verify_rejects_a_corrupted_config_dir(tmp_path):
    (tmp_path / "ok.json").write_text(
        json.dumps(example_raw("trivial")), encoding="utf-8"
    )
    (tmp_path / "broken.json").write_text("{oops", encoding="utf-8")
    proc = _run("verify", "--suite", "solver", "--config-dir", str(tmp_path))
    assert proc.returncode == 2
    assert "config error" in proc.stderr


def test_cli_list_examples_names_every_builtin():
    proc = _run("list-examples")
    assert proc.returncode == 0
    lines = [l for l in proc.stdout.strip().splitlines() if l]
    assert len(lines) >= 6
    names = {l.split(":")[0] for l in lines}
    assert set(example_names()) == names


def test_cli_reports_are_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        proc = _run(
            "verify", "--suite", "variation", "--out", str(path), "--no-timestamp"
        )
        assert proc.returncode == 0, proc.stderr
    assert a.read_bytes() == b.read_bytes()


def test_cli_report_hash_ignores_the_timestamp(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        proc = _run("solve", "trivial", "--y", "0.7", "--out", str(path))
        assert proc.returncode == 0, proc.stderr
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert "timestamp" in ra
    assert ra["report_hash"] == rb["report_hash"]


def test_cli_seed_env_var_overrides_the_config(tmp_path):
    import os

    env = dict(os.environ)
    env["SKEWCRIT_SEED"] = "5"
    out = tmp_path / "seeded.json"
    proc = _run(
        "verify", "--suite", "solver", "--out", str(out), "--no-timestamp", env=env
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["seed"] == 5
