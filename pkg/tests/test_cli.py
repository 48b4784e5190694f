import csv

import pytest

from fleetcharge.cli import EXIT_INFEASIBLE, EXIT_MISSING, EXIT_NUMERIC, main
from fleetcharge.scenario import load_scenario, save_scenario, scenario_to_dict


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_generate_solve_allocate(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["generate", "--seed", "3", "--out", out]) == 0
    scen = str(tmp_path / "scenario.json")
    assert main(["solve", "--scenario", scen, "--out", out]) == 0
    first = (tmp_path / "result.json").read_bytes()
    assert main(["solve", "--scenario", scen, "--out", out]) == 0
    assert (tmp_path / "result.json").read_bytes() == first
    assert main(["allocate", "--scenario", scen, "--out", out]) == 0
    assert header(tmp_path / "assignment.csv") == ["vehicle_id", "company_id", "station_id", "distance", "delta_demand"]
    assert header(tmp_path / "trace.csv")[:2] == ["iter", "J_G"]


def test_allocate_without_result(tmp_path, capsys):
    main(["generate", "--out", str(tmp_path)])
    code = main(["allocate", "--scenario", str(tmp_path / "scenario.json"), "--out", str(tmp_path / "empty")])
    assert code == EXIT_MISSING
    assert "solve" in capsys.readouterr().err


def test_missing_scenario(tmp_path, capsys):
    assert main(["solve", "--scenario", str(tmp_path / "nope.json")]) == EXIT_MISSING
    assert capsys.readouterr().err.count("\n") == 1


def test_gamma_above_bound(tmp_path, capsys):
    main(["generate", "--out", str(tmp_path)])
    code = main(["solve", "--scenario", str(tmp_path / "scenario.json"), "--gamma", "1e-3", "--out", str(tmp_path)])
    assert code == EXIT_NUMERIC
    assert "2.91971e-05" in capsys.readouterr().err


def test_degenerate_scenario(tmp_path, capsys):
    main(["generate", "--out", str(tmp_path)])
    s = load_scenario(tmp_path / "scenario.json")
    d = scenario_to_dict(s)
    # move every vehicle of company 1 far out of range
    for v in d["companies"][0]["vehicles"]:
        v["x"], v["y"], v["s_start"] = 1e4, 1e4, 1.0
    import json

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    assert main(["solve", "--scenario", str(bad), "--out", str(tmp_path)]) == EXIT_INFEASIBLE
    assert "company 1" in capsys.readouterr().err


def test_env_seed_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("FLEETCHARGE_SEED", "9")
    main(["generate", "--seed", "1", "--out", str(tmp_path / "a")])
    monkeypatch.delenv("FLEETCHARGE_SEED")
    main(["generate", "--seed", "9", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "scenario.json").read_bytes() == (tmp_path / "b" / "scenario.json").read_bytes()


def test_example_and_robustness(tmp_path):
    assert main(["example", "--out", str(tmp_path), "--fixed-e-pro"]) == 0
    for name in ("scenario.json", "trace.csv", "decisions.csv", "assignment.csv", "result.json"):
        assert (tmp_path / name).is_file()
    assert main(["robustness", "--out", str(tmp_path), "--alphas", "0", "0.5", "--samples", "2"]) == 0
    assert header(tmp_path / "robustness.csv") == ["alpha", "mean_JG", "min_JG", "max_JG"]
