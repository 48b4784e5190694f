"""Command-line entry point: ``fleetcharge {generate,solve,allocate,example,robustness}``.

Exit codes: 0 ok, 2 missing or unreadable input, 3 infeasible or degenerate
instance, 4 numerical failure (including a step size above the bound).
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .allocation import HallViolation
from .experiments import (
    RobustnessConfig,
    allocate,
    case_study_config,
    generate_solvable,
    read_result_x,
    robustness_sweep,
    run_example,
    write_assignment_csv,
    write_decisions_csv,
    write_result_json,
    write_robustness_csv,
    write_trace_csv,
)
from .feasibility import EmptyFeasibleSetError
from .projection import ProjectionError
from .scenario import ScenarioError, ScenarioParseError, load_scenario, save_scenario
from .solver import SolverConfig, StepSizeError, prepare, solve_game

EXIT_OK = 0
EXIT_MISSING = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

SEED_ENV = "FLEETCHARGE_SEED"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise CliError(EXIT_MISSING, f"{SEED_ENV}={env!r} is not an integer")
    return args.seed


def _solver_config(args) -> SolverConfig:
    return SolverConfig(gamma=args.gamma, max_iters=args.iters, tol=args.tol)


def _out_dir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(path):
    if path is None:
        raise CliError(EXIT_MISSING, "--scenario is required")
    if not Path(path).is_file():
        raise CliError(EXIT_MISSING, f"scenario file not found: {path}")
    return load_scenario(path)


def cmd_generate(args) -> int:
    seed = _seed(args)
    s, _, used = generate_solvable(case_study_config(args.fixed_e_pro), seed)
    out = _out_dir(args) / "scenario.json"
    save_scenario(s, out)
    print(f"wrote {out} (seed {used})")
    return EXIT_OK


def cmd_solve(args) -> int:
    s = _load(args.scenario)
    inst = prepare(s)
    t0 = time.perf_counter()
    result = solve_game(inst, _solver_config(args))
    elapsed = time.perf_counter() - t0
    d = _out_dir(args)
    write_trace_csv(result, d / "trace.csv", s.m)
    write_decisions_csv(s, result, d / "decisions.csv")
    write_result_json(inst, result, d / "result.json")
    status = "converged" if result.converged else "not converged"
    print(
        f"{status} after {result.iterations} iterations in {elapsed:.2f}s, "
        f"J_G={result.J_G:.6g}, vi_residual={result.vi_residual:.3g}"
    )
    return EXIT_OK


def cmd_allocate(args) -> int:
    s = _load(args.scenario)
    d = Path(args.out)
    result_path = Path(args.result) if args.result else d / "result.json"
    if not result_path.is_file():
        raise CliError(EXIT_MISSING, f"no solve result at {result_path}; run 'solve' first")
    x = read_result_x(result_path)
    inst = prepare(s)
    if len(x) != len(s.companies) or any(len(xi) != s.m for xi in x):
        raise CliError(EXIT_MISSING, f"{result_path} does not match the scenario dimensions")
    pairs = allocate(inst, x)
    d.mkdir(parents=True, exist_ok=True)
    write_assignment_csv(s, [a for _, a in pairs], d / "assignment.csv")
    for alloc, _ in pairs:
        print(f"company {alloc.company_id}: {list(alloc.counts)}")
    return EXIT_OK


def cmd_example(args) -> int:
    seed = _seed(args)
    t0 = time.perf_counter()
    out = run_example(seed, _out_dir(args), fixed_e_pro=args.fixed_e_pro, solver=_solver_config(args))
    elapsed = time.perf_counter() - t0
    r = out.result
    print(f"seed {out.seed}: {r.iterations} iterations, J_G={r.J_G:.6g}, {elapsed:.2f}s")
    P = np.asarray(r.prices)
    for c, xi, pi in zip(out.scenario.companies, r.x, P):
        print(f"  company {c.id}: x={np.round(xi, 4).tolist()} p={np.round(pi, 2).tolist()}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    seed = _seed(args)
    s, inst, used = generate_solvable(case_study_config(args.fixed_e_pro), seed)
    cfg = RobustnessConfig(
        alphas=tuple(args.alphas),
        samples_per_alpha=args.samples,
        seed=used,
        perturb_arrival=args.perturb_arrival,
    )
    solver = SolverConfig(gamma=args.gamma, max_iters=args.iters, tol=args.tol, record_trace=False)
    rows = robustness_sweep(inst, cfg, solver)
    d = _out_dir(args)
    save_scenario(s, d / "scenario.json")
    write_robustness_csv(rows, d / "robustness.csv")
    for r in rows:
        print(f"alpha={r.alpha:.2f} mean={r.mean_JG:.6g} min={r.min_JG:.6g} max={r.max_JG:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fleetcharge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=False):
        p.add_argument("--seed", type=int, default=0, help=f"RNG seed (overridden by ${SEED_ENV})")
        p.add_argument("--iters", type=int, default=3000, help="maximum iterations")
        p.add_argument("--gamma", type=float, default=None, help="step size (default 0.99 x bound)")
        p.add_argument("--tol", type=float, default=1e-9, help="sup-norm iterate-change tolerance")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--fixed-e-pro", action="store_true", help="use the case-study provider energy levels")
        if scenario:
            p.add_argument("--scenario", help="scenario JSON file")
        return p

    common(sub.add_parser("generate", help="draw a case-study scenario")).set_defaults(func=cmd_generate)
    common(sub.add_parser("solve", help="compute the equilibrium"), scenario=True).set_defaults(func=cmd_solve)
    p = common(sub.add_parser("allocate", help="round and match a solved allocation"), scenario=True)
    p.add_argument("--result", help="result.json from 'solve' (default: OUT/result.json)")
    p.set_defaults(func=cmd_allocate)
    common(sub.add_parser("example", help="full case-study pipeline")).set_defaults(func=cmd_example)
    p = common(sub.add_parser("robustness", help="noisy-demand sweep"))
    p.add_argument("--alphas", type=float, nargs="+", default=[0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--perturb-arrival", action="store_true", help="also perturb battery-on-arrival estimates")
    p.set_defaults(func=cmd_robustness)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except (FileNotFoundError, ScenarioParseError) as exc:
        code, msg = EXIT_MISSING, str(exc)
    except (EmptyFeasibleSetError, HallViolation) as exc:
        code, msg = EXIT_INFEASIBLE, str(exc)
    except StepSizeError as exc:
        code, msg = EXIT_NUMERIC, str(exc)
    except (ProjectionError, np.linalg.LinAlgError, FloatingPointError) as exc:
        code, msg = EXIT_NUMERIC, f"numerical failure: {exc}"
    except (ScenarioError, ValueError) as exc:
        code, msg = EXIT_INFEASIBLE, str(exc)
    print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
