"""Equilibrium computation.

The Nash equilibrium under system-optimal pricing is found with the averaged
projected-gradient (Krasnoselskij) iteration

    x_i <- 0.5 * (x_i + proj_{K_i}[x_i - gamma * grad_i J_i(x)]),

run as synchronous rounds between a coordinator, which only ever sees the
companies' aggregates N_i x_i, and the companies, which only receive the
aggregate of everybody else.  A centralized QP solve of the government
problem serves as an independent check.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .feasibility import (
    EmptyFeasibleSetError,
    FeasibilitySets,
    FeasibleSet,
    build_constraint_set,
    feasibility_sets,
    is_empty,
)
from .game import (
    CompanyCostParams,
    GameMap,
    PolicyCoefficients,
    build_example_params,
    build_game_map,
    company_gradient,
    evaluate_policy,
    government_cost,
    government_potential,
    synthesize_policy,
    tracking_offset,
)
from .projection import project
from .scenario import GovernmentObjective, Scenario

log = logging.getLogger(__name__)

SAFETY = 0.99


class StepSizeError(ValueError):
    """Step size outside the range where the iteration is guaranteed to converge."""


@dataclass
class SolverConfig:
    gamma: Optional[float] = None
    max_iters: int = 3000
    tol: float = 1e-9  # sup-norm iterate change; inf runs exactly max_iters
    record_trace: bool = True

    def __post_init__(self):
        if not self.tol >= 0:
            raise ValueError(f"tol must be non-negative, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.gamma is not None and not self.gamma > 0:
            raise StepSizeError(f"gamma must be positive, got {self.gamma}")


@dataclass
class EquilibriumResult:
    x: list[np.ndarray]
    sigma: np.ndarray
    prices: list[np.ndarray]
    J_G_trace: list[float]
    sigma_trace: list[np.ndarray]
    iterations: int
    vi_residual: float
    converged: bool
    gamma: float
    step_bound: float
    J_G: float
    J_G_offset: float = 0.0
    messages: list = field(default_factory=list)


@dataclass
class Instance:
    """Everything derived from a scenario that the solvers need."""

    scenario: Scenario
    fsets: list[FeasibilitySets]
    Ks: list[FeasibleSet]
    params: list[CompanyCostParams]
    policies: list[PolicyCoefficients]

    @property
    def objective(self) -> GovernmentObjective:
        return self.scenario.objective

    @property
    def fleet_sizes(self) -> np.ndarray:
        return self.scenario.fleet_sizes


def prepare(s: Scenario) -> Instance:
    fsets = [feasibility_sets(c, s.stations) for c in s.companies]
    Ks = [build_constraint_set(fs) for fs in fsets]
    for fs, K in zip(fsets, Ks):
        if fs.stranded:
            raise EmptyFeasibleSetError(
                f"company {fs.company_id}: vehicles {list(fs.stranded)} cannot reach any station"
            )
        if is_empty(K):
            raise EmptyFeasibleSetError(f"company {fs.company_id}: feasible allocation set is empty")
    params = build_example_params(s, fsets)
    policies = [synthesize_policy(p, s.objective) for p in params]
    return Instance(s, fsets, Ks, params, policies)


# ---------------------------------------------------------------------------
# step size
# ---------------------------------------------------------------------------

def largest_eigenvalue(M, rtol: float = 1e-13, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    v = 1.0 + 0.1 * np.random.default_rng(0).random(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        new = float(v @ w)
        v = w / nrm
        if abs(new - lam) <= rtol * abs(new):
            return new
        lam = new
    log.warning("power iteration hit max_iter=%d", max_iter)
    return lam


def max_step_size(F1) -> float:
    """Supremum 2 / lambda_max(F1) of admissible step sizes."""
    lam = largest_eigenvalue(F1)
    if not lam > 0:
        raise StepSizeError("game map is zero; the step size is unbounded (degenerate game)")
    return 2.0 / lam


# ---------------------------------------------------------------------------
# single step on the stacked map (reference form)
# ---------------------------------------------------------------------------

def krasnoselskij_step(x: Sequence[np.ndarray], gm: GameMap, Ks: Sequence[FeasibleSet], gamma: float):
    """One simultaneous averaged projected step using F(x) = F1 x + F2."""
    m = Ks[0].m
    flat = np.concatenate([np.asarray(xi, dtype=float) for xi in x])
    grad = gm(flat)
    out = []
    for i, K in enumerate(Ks):
        xi = flat[i * m : (i + 1) * m]
        z = project(xi - gamma * grad[i * m : (i + 1) * m], K, start=xi)
        out.append(0.5 * (xi + z))
    return out


# ---------------------------------------------------------------------------
# decentralized protocol
# ---------------------------------------------------------------------------

class CompanyAgent:
    """Holds a company's private data; exchanges aggregates only."""

    def __init__(self, company_id: int, K: FeasibleSet, params: CompanyCostParams, policy: PolicyCoefficients):
        self.company_id = company_id
        self._K = K
        self._params = params
        self._policy = policy
        self.n = params.n
        self._x = project(np.full(K.m, 1.0 / K.m), K)

    def aggregate(self) -> np.ndarray:
        return self.n * self._x

    def _gradient(self, sigma_others):
        return company_gradient(self._x, sigma_others, self._params, self._policy)

    def update(self, sigma_others: np.ndarray, gamma: float) -> np.ndarray:
        x = self._x
        z = project(x - gamma * self._gradient(sigma_others), self._K, start=x)
        self._x = 0.5 * (x + z)
        return self.aggregate()

    def residual(self, sigma_others: np.ndarray, gamma: float) -> float:
        x = self._x
        z = project(x - gamma * self._gradient(sigma_others), self._K, start=x)
        return float(np.max(np.abs(x - z)))

    # read-out after the run, not part of the round protocol
    def allocation(self) -> np.ndarray:
        return self._x.copy()

    def prices(self, sigma_others) -> np.ndarray:
        return evaluate_policy(self._policy, self._x, sigma_others)


def _others(aggregates: list[np.ndarray], i: int) -> np.ndarray:
    total = np.zeros_like(aggregates[0])
    for j, a in enumerate(aggregates):
        if j != i:
            total = total + a
    return total


def _total(aggregates: list[np.ndarray]) -> np.ndarray:
    total = np.zeros_like(aggregates[0])
    for a in aggregates:
        total = total + a
    return total


def resolve_gamma(cfg: SolverConfig, bound: float) -> float:
    if cfg.gamma is None:
        return SAFETY * bound
    if not 0 < cfg.gamma < bound:
        raise StepSizeError(f"gamma={cfg.gamma:.6g} outside (0, {bound:.6g}); the bound is 2/lambda_max(F1)")
    return float(cfg.gamma)


def _step_bound(inst: Instance) -> float:
    # the coordinator only knows N and A_G, so the bound always comes from F1,
    # also when the policies were built from mis-estimated demand
    return max_step_size(build_game_map(inst.fleet_sizes, inst.objective).F1)


def _run(inst: Instance, cfg: SolverConfig, policies=None, log_messages: bool = False) -> EquilibriumResult:
    policies = inst.policies if policies is None else policies
    obj = inst.objective
    bound = _step_bound(inst)
    gamma = resolve_gamma(cfg, bound)

    agents = [
        CompanyAgent(fs.company_id, K, p, pc)
        for fs, K, p, pc in zip(inst.fsets, inst.Ks, inst.params, policies)
    ]
    n = np.array([a.n for a in agents])
    aggregates = [a.aggregate() for a in agents]
    sigma = _total(aggregates)
    J_trace = [government_cost(sigma, obj)] if cfg.record_trace else []
    sigma_trace = [sigma.copy()] if cfg.record_trace else []
    messages = []

    converged = False
    it = 0
    while it < cfg.max_iters:
        it += 1
        down = [_others(aggregates, i) for i in range(len(agents))]
        new = [agent.update(down[i], gamma) for i, agent in enumerate(agents)]
        if log_messages:
            messages.append(
                {
                    "round": it,
                    "downstream": [{"company": a.company_id, "sigma_others": d.tolist()} for a, d in zip(agents, down)],
                    "upstream": [{"company": a.company_id, "aggregate": u.tolist()} for a, u in zip(agents, new)],
                }
            )
        change = max(float(np.max(np.abs(u - a))) / ni for u, a, ni in zip(new, aggregates, n))
        aggregates = new
        sigma = _total(aggregates)
        if cfg.record_trace:
            J_trace.append(government_cost(sigma, obj))
            sigma_trace.append(sigma.copy())
        if math.isfinite(cfg.tol) and change < cfg.tol:
            converged = True
            break

    down = [_others(aggregates, i) for i in range(len(agents))]
    residual = max(a.residual(d, gamma) for a, d in zip(agents, down))
    J = government_cost(sigma, obj)
    if not cfg.record_trace:
        J_trace = [J]
        sigma_trace = [sigma.copy()]
    return EquilibriumResult(
        x=[a.allocation() for a in agents],
        sigma=sigma,
        prices=[a.prices(d) for a, d in zip(agents, down)],
        J_G_trace=J_trace,
        sigma_trace=sigma_trace,
        iterations=it,
        vi_residual=residual,
        converged=converged,
        gamma=gamma,
        step_bound=bound,
        J_G=J,
        J_G_offset=tracking_offset(obj),
        messages=messages,
    )


def solve_game(inst: Instance, cfg: SolverConfig | None = None, policies=None) -> EquilibriumResult:
    """Equilibrium of a prepared instance, optionally under other policies
    than the system-optimal ones (e.g. built from mis-estimated demand)."""
    return _run(inst, cfg or SolverConfig(), policies=policies)


def solve_equilibrium(s: Scenario, cfg: SolverConfig | None = None) -> EquilibriumResult:
    return _run(prepare(s), cfg or SolverConfig())


def run_decentralized(s: Scenario, cfg: SolverConfig | None = None) -> EquilibriumResult:
    """Same iteration as :func:`solve_equilibrium`, keeping the per-round
    message log in ``result.messages``."""
    return _run(prepare(s), cfg or SolverConfig(), log_messages=True)


# ---------------------------------------------------------------------------
# centralized oracle
# ---------------------------------------------------------------------------

@dataclass
class CentralizedResult:
    x: list[np.ndarray]
    sigma: np.ndarray
    J_G: float
    gap: float  # max over the polytope of <grad, x* - y>


def _stacked_constraints(Ks: Sequence[FeasibleSet]):
    m = Ks[0].m
    C = len(Ks)
    G_rows, h_rows, E_rows = [], [], []
    for i, K in enumerate(Ks):
        n_sub = K.n_subset_constraints
        G = np.zeros((n_sub, C * m))
        G[:, i * m : (i + 1) * m] = K.G[:n_sub]
        G_rows.append(G)
        h_rows.append(K.h[:n_sub])
        E = np.zeros(C * m)
        E[i * m : (i + 1) * m] = 1.0
        E_rows.append(E)
    return np.vstack(G_rows), np.concatenate(h_rows), np.vstack(E_rows)


def frank_wolfe_gap(x_flat, grad, Ks: Sequence[FeasibleSet]) -> float:
    """max_{y in K} <grad, x - y>, computed exactly by linear programming."""
    G, h, E = _stacked_constraints(Ks)
    res = linprog(grad, A_ub=G, b_ub=h, A_eq=E, b_eq=np.ones(len(Ks)), bounds=[(0, None)] * len(x_flat), method="highs")
    if res.status != 0:
        raise RuntimeError(f"gap LP failed: {res.message}")
    return float(grad @ x_flat - res.fun)


def centralized_qp(Ks: Sequence[FeasibleSet], fleet_sizes, obj: GovernmentObjective) -> CentralizedResult:
    """Minimise the government potential over the product polytope with SLSQP."""
    gm = build_game_map(fleet_sizes, obj)
    m = Ks[0].m
    G, h, E = _stacked_constraints(Ks)
    scale = max(1.0, float(np.abs(gm.F1).max()))

    def fun(x):
        s = gm.aggregate(x)
        return government_potential(s, obj) / scale

    def jac(x):
        return gm(x) / scale

    x0 = np.concatenate([K.witness for K in Ks])
    res = minimize(
        fun,
        x0,
        jac=jac,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * len(x0),
        constraints=[
            {"type": "ineq", "fun": lambda x: h - G @ x, "jac": lambda x: -G},
            {"type": "eq", "fun": lambda x: E @ x - 1.0, "jac": lambda x: E},
        ],
        options={"ftol": 1e-15, "maxiter": 1000},
    )
    x = np.clip(res.x, 0.0, None)
    sigma = gm.aggregate(x)
    gap = frank_wolfe_gap(x, gm(x), Ks)
    return CentralizedResult(
        x=[x[i * m : (i + 1) * m] for i in range(len(Ks))],
        sigma=sigma,
        J_G=government_cost(sigma, obj),
        gap=gap,
    )


def centralized_optimum(s: Scenario) -> CentralizedResult:
    inst = prepare(s)
    return centralized_qp(inst.Ks, inst.fleet_sizes, inst.objective)
