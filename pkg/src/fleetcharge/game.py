"""Cost functions, pricing-policy synthesis and the affine game map.

All the matrices in this model are diagonal, so they are stored as 1-D
arrays holding the diagonal.  ``x_i`` is a company's allocation over
stations, ``sigma`` the aggregate ``sum_i N_i x_i`` and ``sigma_others``
the aggregate of every other company.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .feasibility import FeasibilitySets
from .scenario import GovernmentObjective, Scenario, charging_demand, distance


@dataclass(frozen=True)
class CompanyCostParams:
    """Cost coefficients of one company.

    ``A``, ``B``, ``D`` and ``R`` are diagonals.  The queuing cost is
    ``0.5 x'Ax + x'B sigma_others + c'x``, the charging cost ``x'D p`` and
    the revenue term ``f'x``.
    """

    n: float
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    D: np.ndarray
    f: np.ndarray
    R: np.ndarray
    e_arr: np.ndarray


@dataclass(frozen=True)
class PolicyCoefficients:
    Abar: np.ndarray
    Bbar: np.ndarray
    Delta: np.ndarray
    Dstar: np.ndarray


@dataclass(frozen=True)
class GameMap:
    """F(x) = F1 @ x + F2 over the stacked allocation of all companies."""

    F1: np.ndarray
    F2: np.ndarray
    A_stack: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.F1 @ np.ravel(x) + self.F2

    def aggregate(self, x: np.ndarray) -> np.ndarray:
        return self.A_stack @ np.ravel(x)


def pseudo_inverse_diag(A) -> np.ndarray:
    """Entrywise reciprocal of a diagonal matrix, keeping zeros at zero."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    d = np.diag(A)
    if np.any(A - np.diag(d)):
        raise ValueError("matrix is not diagonal")
    return np.diag(pinv_diagonal(d))


def pinv_diagonal(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    out = np.zeros_like(d)
    nz = d != 0
    out[nz] = 1.0 / d[nz]
    return out


# ---------------------------------------------------------------------------
# government
# ---------------------------------------------------------------------------

def government_potential(sigma, obj: GovernmentObjective) -> float:
    """0.5 sigma'A_G sigma + b_G'sigma."""
    sigma = np.asarray(sigma, dtype=float)
    return float(0.5 * sigma @ (obj.weights * sigma) + obj.linear @ sigma)


def tracking_offset(obj: GovernmentObjective) -> float:
    """Constant separating the tracking form from the potential form."""
    if obj.target is None:
        return 0.0
    t = np.asarray(obj.target)
    return float(0.5 * t @ (obj.weights * t))


def government_cost(sigma, obj: GovernmentObjective) -> float:
    """Weighted squared distance to the target, or the potential form if no
    target is set."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (len(obj.A_G),):
        raise ValueError(f"sigma has shape {sigma.shape}, expected ({len(obj.A_G)},)")
    if obj.target is None:
        return government_potential(sigma, obj)
    r = sigma - np.asarray(obj.target)
    return float(0.5 * r @ (obj.weights * r))


# ---------------------------------------------------------------------------
# company cost terms
# ---------------------------------------------------------------------------

def queuing_cost(x_i, sigma_others, p: CompanyCostParams) -> float:
    x_i = np.asarray(x_i, dtype=float)
    return float(0.5 * x_i @ (p.A * x_i) + x_i @ (p.B * sigma_others) + p.c @ x_i)


def expected_queuing_cost(x_i, sigma, n_i: float, Q, M) -> float:
    """N_i x_i'Q(sigma - M) with ``sigma`` the full aggregate."""
    x_i = np.asarray(x_i, dtype=float)
    return float(n_i * x_i @ (np.asarray(Q) * (np.asarray(sigma) - np.asarray(M))))


def charging_cost(x_i, price, D) -> float:
    return float(np.asarray(x_i) @ (np.asarray(D) * np.asarray(price)))


def revenue_cost(x_i, f_i) -> float:
    return float(np.asarray(f_i) @ np.asarray(x_i))


def evaluate_policy(pc: PolicyCoefficients, x_i, sigma_others) -> np.ndarray:
    """Per-station unit charging price announced to one company."""
    x_i = np.asarray(x_i, dtype=float)
    return pc.Dstar * (0.5 * pc.Abar * x_i + pc.Bbar * np.asarray(sigma_others) + pc.Delta)


def company_cost(x_i, sigma_others, p: CompanyCostParams, pc: PolicyCoefficients) -> float:
    price = evaluate_policy(pc, x_i, sigma_others)
    return queuing_cost(x_i, sigma_others, p) + charging_cost(x_i, price, p.D) + revenue_cost(x_i, p.f)


def reduced_cost(x_i, sigma_others, n_i: float, obj: GovernmentObjective) -> float:
    """Company cost under the system-optimal policy, valid for x_i supported
    on stations the company can reach."""
    x_i = np.asarray(x_i, dtype=float)
    a = obj.weights
    return float(0.5 * n_i**2 * x_i @ (a * x_i) + n_i * x_i @ (a * np.asarray(sigma_others) + obj.linear))


def company_gradient(x_i, sigma_others, p: CompanyCostParams, pc: PolicyCoefficients) -> np.ndarray:
    """Gradient of :func:`company_cost` in x_i."""
    served = p.D * pc.Dstar
    return (
        p.A * x_i
        + p.B * sigma_others
        + p.c
        + served * (pc.Abar * x_i + pc.Bbar * sigma_others + pc.Delta)
        + p.f
    )


# ---------------------------------------------------------------------------
# parameter builders
# ---------------------------------------------------------------------------

def build_example_params(s: Scenario, fsets: Sequence[FeasibilitySets]) -> list[CompanyCostParams]:
    """Case-study instantiation: queuing cost N_i x'Q(sigma - M), average
    demand R_i, D_i = N_i R_i and f_i = N_i (e_arr - e_pro)."""
    Q = np.asarray(s.Q, dtype=float)
    M = s.capacities
    P = np.asarray(s.P, dtype=float)
    e_pro = np.asarray(s.e_pro, dtype=float)
    params = []
    for company, fs in zip(s.companies, fsets):
        if fs.company_id != company.id:
            raise ValueError(f"feasibility sets for company {fs.company_id} paired with company {company.id}")
        by_id = {v.id: v for v in company.vehicles}
        R = np.zeros(s.m)
        e_arr = np.zeros(s.m)
        for k, station in enumerate(s.stations):
            members = sorted(fs.sets[k])
            if not members:
                continue
            R[k] = np.mean([charging_demand(by_id[v], station) for v in members])
            e_arr[k] = company.u * P[k] * np.mean([distance(by_id[v], station) for v in members])
        n = float(company.n_vehicles)
        params.append(
            CompanyCostParams(
                n=n,
                A=2.0 * n**2 * Q,
                B=n * Q,
                c=-n * Q * M,
                D=n * R,
                f=n * (e_arr - e_pro),
                R=R,
                e_arr=e_arr,
            )
        )
    return params


def with_demand_estimate(p: CompanyCostParams, R_est: np.ndarray) -> CompanyCostParams:
    """Copy of ``p`` whose charging-demand matrix is replaced by an estimate.

    Used by the government side when it only knows an estimate of R_i.
    """
    R_est = np.asarray(R_est, dtype=float)
    return CompanyCostParams(n=p.n, A=p.A, B=p.B, c=p.c, D=p.n * R_est, f=p.f, R=R_est, e_arr=p.e_arr)


def synthesize_policy(p: CompanyCostParams, obj: GovernmentObjective) -> PolicyCoefficients:
    a = obj.weights
    return PolicyCoefficients(
        Abar=p.n**2 * a - p.A,
        Bbar=p.n * a - p.B,
        Delta=p.n * obj.linear - p.c - p.f,
        Dstar=pinv_diagonal(p.D),
    )


def build_game_map(fleet_sizes, obj: GovernmentObjective) -> GameMap:
    n = np.asarray(fleet_sizes, dtype=float)
    m = len(obj.A_G)
    A_stack = np.hstack([ni * np.eye(m) for ni in n])
    F1 = A_stack.T @ np.diag(obj.weights) @ A_stack
    F2 = A_stack.T @ obj.linear
    return GameMap(F1=F1, F2=F2, A_stack=A_stack)


def affine_game_map(params: Sequence[CompanyCostParams], policies: Sequence[PolicyCoefficients]):
    """(M, q) with the stacked company gradients equal to M @ x + q.

    Under system-optimal policies M agrees with the game map's F1 on every
    station a company can reach; with mis-estimated policies M is no longer
    symmetric.
    """
    C = len(params)
    m = len(params[0].A)
    n = np.array([p.n for p in params])
    M = np.zeros((C * m, C * m))
    q = np.zeros(C * m)
    for i, (p, pc) in enumerate(zip(params, policies)):
        served = p.D * pc.Dstar
        rows = slice(i * m, (i + 1) * m)
        for j in range(C):
            cols = slice(j * m, (j + 1) * m)
            if j == i:
                M[rows, cols] = np.diag(p.A + served * pc.Abar)
            else:
                M[rows, cols] = np.diag(n[j] * (p.B + served * pc.Bbar))
        q[rows] = p.c + served * pc.Delta + p.f
    return M, q
