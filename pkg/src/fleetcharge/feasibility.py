"""Reachability sets per company and the tightened allocation polytope.

For a company with N vehicles and reachability sets F_j, the polytope keeps
x on the probability simplex and adds, for every proper nonempty subset S of
stations,

    N * sum_{j in S} x_j <= max(0, |union_{j in S} F_j| - |S|).

Any floor/ceil rounding of N*x that sums to N then admits a matching of
vehicles to stations (see :mod:`fleetcharge.allocation`).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .scenario import Company, Station, reachable

MAX_STATIONS = 12
LP_TOL = 1e-9


class EmptyFeasibleSetError(ValueError):
    """The allocation polytope of some company has no points."""


@dataclass(frozen=True)
class FeasibilitySets:
    """Per-station sets of vehicle ids able to reach that station."""

    company_id: int
    vehicle_ids: tuple[int, ...]
    sets: tuple[frozenset, ...]

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicle_ids)

    @property
    def stranded(self) -> tuple[int, ...]:
        """Vehicles that reach no station at all."""
        covered = frozenset().union(*self.sets)
        return tuple(v for v in self.vehicle_ids if v not in covered)

    def union_size(self, subset: Iterable[int]) -> int:
        return len(frozenset().union(*(self.sets[j] for j in subset)))

    @classmethod
    def from_lists(cls, n_vehicles: int, sets: Sequence[Iterable[int]], company_id: int = 1) -> "FeasibilitySets":
        """Build from plain id lists; vehicles are numbered 1..n_vehicles."""
        ids = tuple(range(1, n_vehicles + 1))
        fsets = tuple(frozenset(s) for s in sets)
        for s in fsets:
            if not s <= set(ids):
                raise ValueError(f"unknown vehicle ids {sorted(s - set(ids))}")
        return cls(company_id=company_id, vehicle_ids=ids, sets=fsets)


def feasibility_sets(company: Company, stations: Sequence[Station]) -> FeasibilitySets:
    return FeasibilitySets(
        company_id=company.id,
        vehicle_ids=tuple(v.id for v in company.vehicles),
        sets=tuple(frozenset(v.id for v in company.vehicles if reachable(v, k)) for k in stations),
    )


class FeasibleSet:
    """The polytope of admissible continuous allocations for one company.

    Inequalities are stored normalised by the fleet size: ``G @ x <= h`` with
    one indicator row per proper subset followed by ``-x <= 0``, plus the
    equality ``sum(x) == 1``.  ``witness`` is a feasible point or None when
    the set is empty.
    """

    def __init__(self, n_vehicles: int, m: int, subsets, bounds, max_stations: int = MAX_STATIONS):
        if m < 1:
            raise ValueError("need at least one station")
        if m > max_stations:
            raise ValueError(
                f"{m} stations exceeds the limit of {max_stations}; the subset "
                f"constraints grow as 2^m"
            )
        self.n_vehicles = int(n_vehicles)
        self.m = int(m)
        self.subsets: tuple[tuple[int, ...], ...] = tuple(tuple(s) for s in subsets)
        self.bounds: tuple[int, ...] = tuple(int(c) for c in bounds)

        rows = np.zeros((len(self.subsets), self.m))
        for r, S in enumerate(self.subsets):
            rows[r, list(S)] = 1.0
        self.G = np.vstack([rows, -np.eye(self.m)])
        self.h = np.concatenate([np.asarray(self.bounds, dtype=float) / self.n_vehicles, np.zeros(self.m)])
        self.G.setflags(write=False)
        self.h.setflags(write=False)
        self.witness: Optional[np.ndarray] = self._phase_one()

    def __repr__(self) -> str:
        return f"FeasibleSet(n_vehicles={self.n_vehicles}, m={self.m}, constraints={len(self.subsets)})"

    @property
    def n_subset_constraints(self) -> int:
        return len(self.subsets)

    def _phase_one(self) -> Optional[np.ndarray]:
        res = linprog(
            np.zeros(self.m),
            A_ub=self.G[: len(self.subsets)] if self.subsets else None,
            b_ub=self.h[: len(self.subsets)] if self.subsets else None,
            A_eq=np.ones((1, self.m)),
            b_eq=[1.0],
            bounds=[(0, None)] * self.m,
            method="highs",
            options={"primal_feasibility_tolerance": LP_TOL},
        )
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"phase-one LP failed: {res.message}")
        x = np.asarray(res.x, dtype=float)
        x.setflags(write=False)
        return x

    @property
    def forced_zero(self) -> np.ndarray:
        """Mask of stations pinned to zero by some subset bound of 0."""
        mask = np.zeros(self.m, dtype=bool)
        for S, c in zip(self.subsets, self.bounds):
            if c == 0:
                mask[list(S)] = True
        return mask

    def constraint_pairs(self) -> list[tuple[list[int], int]]:
        """(S, c_S) pairs with 0-based station positions, for audit output."""
        return [(list(S), c) for S, c in zip(self.subsets, self.bounds)]


def build_constraint_set(fs: FeasibilitySets, max_stations: int = MAX_STATIONS) -> FeasibleSet:
    m = fs.m
    if m > max_stations:
        raise ValueError(f"{m} stations exceeds the limit of {max_stations}")
    subsets = []
    bounds = []
    for size in range(1, m):
        for S in combinations(range(m), size):
            subsets.append(S)
            bounds.append(max(0, fs.union_size(S) - size))
    return FeasibleSet(fs.n_vehicles, m, subsets, bounds, max_stations=max_stations)


def is_member(x, K: FeasibleSet, tol: float = 1e-8) -> bool:
    x = np.asarray(x, dtype=float)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if x.shape != (K.m,):
        raise ValueError(f"expected a vector of length {K.m}, got shape {x.shape}")
    if np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        return False
    n_sub = K.n_subset_constraints
    lhs = K.n_vehicles * (K.G[:n_sub] @ x)
    return bool(np.all(lhs <= np.asarray(K.bounds) + K.n_vehicles * tol))


def is_empty(K: FeasibleSet) -> bool:
    return K.witness is None


def is_degenerate(fs: FeasibilitySets, K: Optional[FeasibleSet] = None) -> bool:
    """True when some vehicle is stranded or the polytope is empty."""
    if fs.stranded:
        return True
    if K is None:
        K = build_constraint_set(fs)
    return is_empty(K)
