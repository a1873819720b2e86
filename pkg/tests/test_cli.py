import csv
import json

import numpy as np
import pytest

from dflab.cli import (ScenarioConfig, bundled_scenarios, load_config, main,
                       run_scenario)
from dflab.graphs import parse_graph
from dflab.metrics import dump_metric, parse_metric, three_point_metrics


def _read_report(outdir):
    with open(outdir / "report.json") as fh:
        return json.load(fh)


def test_bundled_catalog_names():
    names = set(bundled_scenarios())
    assert {"zd_intrinsic", "three_point_counterexample", "topo_degeneration",
            "powerlaw_metric", "lattice_spectral", "shnol_ratio_membership",
            "mirror_divergence"} <= names


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "zd_intrinsic" in out and "mirror_divergence" in out


def test_zd_scenario(tmp_path, capsys):
    code = main(["run", "zd_intrinsic", "--out", str(tmp_path)])
    assert code == 0
    report = _read_report(tmp_path / "zd_intrinsic")
    assert report["all_passed"] is True
    verify = report["tasks"][0]
    assert verify["outputs"]["rowsum"]["verdict"] is True
    assert abs(verify["outputs"]["rowsum"]["interior_min_slack"]) <= 1e-12
    # slack table: zeros at interior rows
    with open(tmp_path / "zd_intrinsic" / verify["csv"][0]) as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        if row["interior"] == "1":
            assert abs(float(row["slack"])) <= 1e-12
    assert report["tasks"][1]["outputs"]["trend"]["verdict"] == "finite"


def test_three_point_scenario(tmp_path):
    code = main(["run", "three_point_counterexample", "--out", str(tmp_path)])
    assert code == 0
    report = _read_report(tmp_path / "three_point_counterexample")
    tasks = {(t["task"], t["expect"]): t for t in report["tasks"]}
    failing = tasks[("verify-metric", "fail")]
    assert failing["verdict"] is False and failing["passed"] is True
    assert failing["outputs"]["definitional"]["worst_violation"] == 1.0
    assert failing["outputs"]["definitional"]["worst_vertex"] == 1
    cap = tasks[("capacity", "pass")]
    assert cap["outputs"]["value"] == pytest.approx(7 / 3, abs=1e-10)


def test_exit_code_2_on_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    missing_seed = tmp_path / "noseed.json"
    missing_seed.write_text(json.dumps({"model": {"kind": "three_point"},
                                        "tasks": []}))
    assert main(["run", str(missing_seed), "--out", str(tmp_path / "o")]) == 2
    unknown_task = tmp_path / "task.json"
    unknown_task.write_text(json.dumps({"model": {"kind": "three_point"},
                                        "seed": 1,
                                        "tasks": [{"task": "nope"}]}))
    assert main(["run", str(unknown_task), "--out", str(tmp_path / "o")]) == 2
    assert main(["run", "no_such_scenario", "--out", str(tmp_path / "o")]) == 2


def test_failing_scenario_exit_code(tmp_path):
    cfg = tmp_path / "fail.json"
    cfg.write_text(json.dumps({
        "name": "failing",
        "model": {"kind": "three_point"},
        "metric": {"kind": "named", "name": "three_point_max"},
        "seed": 1,
        "tasks": [{"task": "verify-metric"}],
    }))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_dump_model_roundtrip(capsys):
    assert main(["dump-model", "three_point_counterexample"]) == 0
    text = capsys.readouterr().out
    G = parse_graph(text)
    assert G.n == 3
    assert G.j[0, 1] == 1.0 and G.j[0, 2] == 0.0
    assert text.splitlines()[0] == "3 2"


def test_seed_override_changes_report(tmp_path):
    base = load_config("three_point_counterexample")
    r1, _ = run_scenario(base, tmp_path / "a")
    assert main(["run", "three_point_counterexample", "--out",
                 str(tmp_path / "b"), "--seed", "999"]) == 0
    r2 = _read_report(tmp_path / "b" / "three_point_counterexample")
    assert r2["scenario"]["seed"] == 999
    assert r1["scenario"]["seed"] != 999


def test_determinism_three_point(tmp_path):
    cfg = load_config("three_point_counterexample")
    r1, _ = run_scenario(cfg, tmp_path / "run1")
    r2, _ = run_scenario(cfg, tmp_path / "run2")
    r1.pop("timing")
    r2.pop("timing")
    assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)


def test_parallel_jobs(tmp_path):
    code = main(["run", "three_point_counterexample", "mirror_divergence",
                 "--jobs", "2", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "three_point_counterexample" / "report.json").exists()
    assert (tmp_path / "mirror_divergence" / "report.json").exists()


def test_scenario_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({"model": {"kind": "three_point"},
                                  "tasks": []})
    cfg = ScenarioConfig.from_dict({"model": {"kind": "three_point"},
                                    "seed": 3, "tasks": []})
    assert cfg.tolerances["ratio_threshold"] == 0.05


def test_metric_dump_roundtrip():
    rho1, _ = three_point_metrics()
    text = dump_metric(rho1)
    lines = text.strip().splitlines()
    assert lines[0] == "3"
    assert lines[1] == "0"
    assert lines[2] == "1 1"
    back = parse_metric(text)
    np.testing.assert_array_equal(back.table(), rho1.table())
