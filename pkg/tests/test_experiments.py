import csv

import numpy as np
import pytest

from fleetcharge.experiments import (
    ASSIGNMENT_HEADER,
    DECISIONS_HEADER,
    ROBUSTNESS_HEADER,
    RobustnessConfig,
    perturbed_demand,
    robustness_sweep,
    run_example,
    write_robustness_csv,
)
from fleetcharge.scenario import CASE_STUDY_E_PRO, load_scenario
from fleetcharge.solver import solve_game


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_example_files(tmp_path):
    out = run_example(0, tmp_path, fixed_e_pro=True)
    assert out.scenario.e_pro == CASE_STUDY_E_PRO
    trace = read(out.files["trace"])
    assert trace[0] == ["iter", "J_G", "sigma_1", "sigma_2", "sigma_3", "sigma_4"]
    assert len(trace) == out.result.iterations + 2
    assert read(out.files["decisions"])[0] == DECISIONS_HEADER
    assert len(read(out.files["decisions"])) == 1 + 3 * 4
    rows = read(out.files["assignment"])
    assert rows[0] == ASSIGNMENT_HEADER
    assert len(rows) == 1 + 140
    assert load_scenario(out.files["scenario"]) == out.scenario
    for r in rows[1:]:
        assert float(r[4]) > 0


def test_example_deterministic(tmp_path):
    a = run_example(4, tmp_path / "a")
    b = run_example(4, tmp_path / "b")
    for key in a.files:
        assert a.files[key].read_bytes() == b.files[key].read_bytes()


def test_assignment_counts_match_rounding(tmp_path):
    out = run_example(2)
    for fs, xi, a in zip(out.instance.fsets, out.result.x, out.assignments):
        counts = np.array(a.counts(len(xi)))
        assert counts.sum() == fs.n_vehicles
        assert np.all(np.abs(counts - fs.n_vehicles * xi) < 1 + 1e-9)


def test_noise_model():
    R = np.array([10.0, 0.0, 30.0])
    rng = np.random.default_rng(0)
    assert perturbed_demand(R, 0.0, rng).tolist() == R.tolist()
    draws = np.array([perturbed_demand(R, 1.0, rng) for _ in range(4000)])
    assert np.all(draws[:, 1] == 0.0)
    assert np.all(draws >= 0)
    assert draws[:, 2].std() == pytest.approx(2.0, rel=0.08)


def test_robustness_config_validation():
    with pytest.raises(ValueError):
        RobustnessConfig(alphas=(-0.1,))
    with pytest.raises(ValueError):
        RobustnessConfig(samples_per_alpha=0)


def test_zero_noise_is_baseline(case_study):
    _, inst = case_study
    rows = robustness_sweep(inst, RobustnessConfig(alphas=(0.0,), samples_per_alpha=3))
    assert rows[0].mean_JG == solve_game(inst).J_G


def test_single_sample_reproducible(case_study, tmp_path):
    _, inst = case_study
    cfg = RobustnessConfig(alphas=(0.6, 0.2), samples_per_alpha=1, seed=5)
    a = robustness_sweep(inst, cfg)
    b = robustness_sweep(inst, cfg)
    assert [r.values for r in a] == [r.values for r in b]
    assert [r.alpha for r in a] == [0.2, 0.6]
    write_robustness_csv(a, tmp_path / "r.csv")
    rows = read(tmp_path / "r.csv")
    assert rows[0] == ROBUSTNESS_HEADER
    assert [float(v) for v in rows[1]] == [0.2, a[0].mean_JG, a[0].min_JG, a[0].max_JG]


def test_arrival_perturbation_changes_outcome(case_study):
    _, inst = case_study
    plain = robustness_sweep(inst, RobustnessConfig(alphas=(0.5,), samples_per_alpha=2, seed=1))
    both = robustness_sweep(inst, RobustnessConfig(alphas=(0.5,), samples_per_alpha=2, seed=1, perturb_arrival=True))
    assert plain[0].values != both[0].values
