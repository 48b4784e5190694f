"""Case-study pipelines and their file outputs.

``run_example`` reproduces the three-company case study end to end and
``robustness_sweep`` re-solves it with pricing policies built from noisy
estimates of the average charging demand.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .allocation import Assignment, IntegerAllocation, match_vehicles, round_allocation
from .feasibility import EmptyFeasibleSetError
from .game import CompanyCostParams, synthesize_policy, with_demand_estimate
from .scenario import (
    CASE_STUDY_E_PRO,
    Scenario,
    ScenarioConfig,
    ScenarioError,
    charging_demand,
    distance,
    generate_scenario,
    save_scenario,
)
from .solver import EquilibriumResult, Instance, SolverConfig, prepare, solve_game

NOISE_FLOOR = 1e-6

TRACE_HEADER = ["iter", "J_G"]
DECISIONS_HEADER = ["company", "station", "x", "price"]
ASSIGNMENT_HEADER = ["vehicle_id", "company_id", "station_id", "distance", "delta_demand"]
ROBUSTNESS_HEADER = ["alpha", "mean_JG", "min_JG", "max_JG"]


def case_study_config(fixed_e_pro: bool = False) -> ScenarioConfig:
    return ScenarioConfig(e_pro=CASE_STUDY_E_PRO if fixed_e_pro else None)


def generate_solvable(config: ScenarioConfig, seed: int, attempts: int = 10) -> tuple[Scenario, Instance, int]:
    """First non-degenerate instance among seeds seed, seed+1, ..."""
    last = None
    for k in range(attempts):
        try:
            s = generate_scenario(config, seed + k)
            return s, prepare(s), seed + k
        except (EmptyFeasibleSetError, ScenarioError) as exc:
            last = exc
    raise EmptyFeasibleSetError(f"no solvable scenario in seeds {seed}..{seed + attempts - 1}: {last}")


# ---------------------------------------------------------------------------
# allocation
# ---------------------------------------------------------------------------

def allocate(inst: Instance, x: Sequence[np.ndarray]) -> list[tuple[IntegerAllocation, Assignment]]:
    out = []
    for fs, xi in zip(inst.fsets, x):
        alloc = round_allocation(xi, fs.n_vehicles, company_id=fs.company_id)
        out.append((alloc, match_vehicles(alloc, fs)))
    return out


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_trace_csv(result: EquilibriumResult, path, m: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER + [f"sigma_{j + 1}" for j in range(m)])
        for k, (J, sigma) in enumerate(zip(result.J_G_trace, result.sigma_trace)):
            w.writerow([k, _fmt(J)] + [_fmt(v) for v in sigma])


def write_decisions_csv(s: Scenario, result: EquilibriumResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DECISIONS_HEADER)
        for c, xi, pi in zip(s.companies, result.x, result.prices):
            for k, station in enumerate(s.stations):
                w.writerow([c.id, station.id, _fmt(xi[k]), _fmt(pi[k])])


def write_assignment_csv(s: Scenario, assignments: Sequence[Assignment], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ASSIGNMENT_HEADER)
        for c, a in zip(s.companies, assignments):
            for v in c.vehicles:
                k = s.stations[a.station_of[v.id]]
                w.writerow([v.id, c.id, k.id, _fmt(distance(v, k)), _fmt(charging_demand(v, k))])


def result_to_dict(inst: Instance, result: EquilibriumResult) -> dict:
    s = inst.scenario
    return {
        "companies": [c.id for c in s.companies],
        "stations": [k.id for k in s.stations],
        "x": [xi.tolist() for xi in result.x],
        "prices": [p.tolist() for p in result.prices],
        "sigma": result.sigma.tolist(),
        "J_G": result.J_G,
        "J_G_offset": result.J_G_offset,
        "iterations": result.iterations,
        "converged": result.converged,
        "vi_residual": result.vi_residual,
        "gamma": result.gamma,
        "step_bound": result.step_bound,
        "lambda_max": 2.0 / result.step_bound,
        "constraints": [K.constraint_pairs() for K in inst.Ks],
        "R": [p.R.tolist() for p in inst.params],
        "e_arr": [p.e_arr.tolist() for p in inst.params],
    }


def write_result_json(inst: Instance, result: EquilibriumResult, path) -> None:
    Path(path).write_text(json.dumps(result_to_dict(inst, result), indent=2) + "\n")


def read_result_x(path) -> list[np.ndarray]:
    d = json.loads(Path(path).read_text())
    return [np.asarray(x, dtype=float) for x in d["x"]]


def price_extremes(prices: Sequence[np.ndarray]) -> tuple[list[int], list[int]]:
    """Per-company positions of the most and least expensive station."""
    P = np.asarray(prices)
    return P.argmax(axis=1).tolist(), P.argmin(axis=1).tolist()


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

@dataclass
class ExampleOutput:
    scenario: Scenario
    seed: int
    instance: Instance
    result: EquilibriumResult
    assignments: list
    files: dict = field(default_factory=dict)


def run_example(seed: int, out_dir=None, fixed_e_pro: bool = False, solver: Optional[SolverConfig] = None) -> ExampleOutput:
    s, inst, used = generate_solvable(case_study_config(fixed_e_pro), seed)
    result = solve_game(inst, solver or SolverConfig())
    pairs = allocate(inst, result.x)
    out = ExampleOutput(s, used, inst, result, [a for _, a in pairs])
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        files = {
            "scenario": d / "scenario.json",
            "trace": d / "trace.csv",
            "decisions": d / "decisions.csv",
            "assignment": d / "assignment.csv",
            "result": d / "result.json",
        }
        save_scenario(s, files["scenario"])
        write_trace_csv(result, files["trace"], s.m)
        write_decisions_csv(s, result, files["decisions"])
        write_assignment_csv(s, out.assignments, files["assignment"])
        write_result_json(inst, result, files["result"])
        out.files = files
    return out


@dataclass
class RobustnessConfig:
    alphas: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    samples_per_alpha: int = 100
    seed: int = 0
    perturb_arrival: bool = False  # also mis-estimate the expected battery on arrival

    def __post_init__(self):
        if any(a < 0 for a in self.alphas):
            raise ValueError("alphas must be non-negative")
        if self.samples_per_alpha < 1:
            raise ValueError("samples_per_alpha must be >= 1")


@dataclass
class RobustnessRow:
    alpha: float
    mean_JG: float
    min_JG: float
    max_JG: float
    values: list[float]
    converged: int


def perturbed_demand(R: np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """R + w on reachable stations, w ~ N(0, (alpha R_min / 5)^2), floored."""
    feasible = R > 0
    r_min = R[feasible].min()
    w = rng.normal(0.0, alpha * r_min / 5.0, size=R.shape)
    return np.where(feasible, np.maximum(R + w, NOISE_FLOOR), 0.0)


def _estimated(p: CompanyCostParams, alpha: float, rng: np.random.Generator, arrival: bool) -> CompanyCostParams:
    est = with_demand_estimate(p, perturbed_demand(p.R, alpha, rng))
    if not arrival:
        return est
    feasible = p.R > 0
    e_min = np.abs(p.e_arr[feasible]).min()
    w = np.where(feasible, rng.normal(0.0, alpha * e_min / 5.0, size=p.e_arr.shape), 0.0)
    return replace(est, f=p.f + p.n * w, e_arr=p.e_arr + w)


def _mean(values: Sequence[float]) -> float:
    # centred on the first sample so that identical samples give that value exactly
    v0 = values[0]
    return v0 + math.fsum(v - v0 for v in values) / len(values)


def robustness_sweep(inst: Instance, cfg: RobustnessConfig, solver: Optional[SolverConfig] = None) -> list[RobustnessRow]:
    solver = solver or SolverConfig(record_trace=False)
    rng = np.random.default_rng(cfg.seed)
    obj = inst.objective
    rows = []
    for alpha in cfg.alphas:
        values = []
        n_conv = 0
        for _ in range(cfg.samples_per_alpha):
            policies = [
                synthesize_policy(_estimated(p, alpha, rng, cfg.perturb_arrival), obj)
                for p in inst.params
            ]
            r = solve_game(inst, solver, policies=policies)
            values.append(r.J_G)
            n_conv += r.converged
        rows.append(
            RobustnessRow(
                alpha=float(alpha),
                mean_JG=_mean(values),
                min_JG=min(values),
                max_JG=max(values),
                values=values,
                converged=n_conv,
            )
        )
    rows.sort(key=lambda r: r.alpha)
    return rows


def write_robustness_csv(rows: Sequence[RobustnessRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ROBUSTNESS_HEADER)
        for r in rows:
            w.writerow([_fmt(r.alpha), _fmt(r.mean_JG), _fmt(r.min_JG), _fmt(r.max_JG)])
