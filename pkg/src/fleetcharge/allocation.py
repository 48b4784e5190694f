"""Integer allocations and vehicle-to-station matchings.

A continuous allocation x of N vehicles is rounded entrywise to floor or
ceil of N*x with the counts summing to N.  Vehicles are then matched to
stations on the bipartite graph whose right side holds n_j copies of
station j; a vehicle is adjacent to every copy of the stations it reaches.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator, Optional, Sequence

import numpy as np

from .feasibility import FeasibilitySets

SNAP = 1e-9


class HallViolation(ValueError):
    """No perfect matching exists; ``subset`` is a set of station positions
    asking for more vehicles than can reach it."""

    def __init__(self, subset: Sequence[int], demand: int, supply: int):
        self.subset = tuple(subset)
        self.demand = demand
        self.supply = supply
        super().__init__(
            f"stations {list(self.subset)} need {demand} vehicles but only {supply} can reach them"
        )


@dataclass(frozen=True)
class IntegerAllocation:
    counts: tuple[int, ...]
    company_id: int = 1

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class Assignment:
    company_id: int
    station_of: dict  # vehicle id -> station position

    def counts(self, m: int) -> tuple[int, ...]:
        out = [0] * m
        for j in self.station_of.values():
            out[j] += 1
        return tuple(out)


def _scaled(x, n: int) -> np.ndarray:
    y = np.clip(np.asarray(x, dtype=float), 0.0, None) * n
    near = np.abs(y - np.round(y)) <= SNAP * max(1, n)
    y[near] = np.round(y[near])
    return y


def round_allocation(x, n: int, company_id: int = 1) -> IntegerAllocation:
    """Largest-remainder rounding; ties go to the lower station position."""
    y = _scaled(x, n)
    floors = np.floor(y).astype(int)
    deficit = n - int(floors.sum())
    if deficit < 0 or deficit > len(y):
        raise ValueError(f"allocation does not sum to 1 (scaled sum {y.sum():.6g} for n={n})")
    rem = y - floors
    order = sorted(range(len(y)), key=lambda j: (-rem[j], j))
    counts = floors.copy()
    for j in order[:deficit]:
        counts[j] += 1
    return IntegerAllocation(tuple(int(c) for c in counts), company_id)


def all_roundings(x, n: int, company_id: int = 1) -> Iterator[IntegerAllocation]:
    """Every floor/ceil choice of n*x whose entries sum to n."""
    y = _scaled(x, n)
    options = [sorted({int(math.floor(v)), int(math.ceil(v))}) for v in y]
    for combo in product(*options):
        if sum(combo) == n:
            yield IntegerAllocation(tuple(combo), company_id)


def hall_condition(alloc: IntegerAllocation, fs: FeasibilitySets) -> bool:
    return hall_violator(alloc, fs) is None


def hall_violator(alloc: IntegerAllocation, fs: FeasibilitySets) -> Optional[tuple[int, ...]]:
    """First nonempty station subset (by size, then lexicographic) with more
    allocated vehicles than reachable ones, or None."""
    counts = alloc.counts
    if len(counts) != fs.m:
        raise ValueError(f"allocation has {len(counts)} stations, feasibility sets have {fs.m}")
    for size in range(1, fs.m + 1):
        for S in combinations(range(fs.m), size):
            if sum(counts[j] for j in S) > fs.union_size(S):
                return S
    return None


def _hopcroft_karp(adj: list[list[int]], n_right: int):
    """Maximum matching; ``adj[u]`` lists right vertices adjacent to left u."""
    n_left = len(adj)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    INF = n_left + 1

    while True:
        dist = [INF] * n_left
        q = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                q.append(u)
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        if not found:
            break

        def dfs(u: int) -> bool:
            for v in adj[u]:
                w = match_r[v]
                if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                    match_l[u] = v
                    match_r[v] = u
                    return True
            dist[u] = INF
            return False

        for u in range(n_left):
            if match_l[u] == -1:
                dfs(u)
    return match_l, match_r


def match_vehicles(alloc: IntegerAllocation, fs: FeasibilitySets) -> Assignment:
    """Assign every vehicle to one reachable station with per-station counts
    equal to ``alloc.counts``.

    Raises HallViolation with a violating station subset when impossible.
    """
    counts = alloc.counts
    if len(counts) != fs.m:
        raise ValueError(f"allocation has {len(counts)} stations, feasibility sets have {fs.m}")
    if any(c < 0 for c in counts):
        raise ValueError("negative station count")
    if sum(counts) < fs.n_vehicles:
        raise ValueError(f"counts sum to {sum(counts)}, fewer than the {fs.n_vehicles} vehicles")
    copies = [j for j, c in enumerate(counts) for _ in range(c)]
    # left side: station copies, right side: vehicles
    vidx = {v: k for k, v in enumerate(fs.vehicle_ids)}
    adj = [sorted(vidx[v] for v in fs.sets[j]) for j in copies]
    match_l, _ = _hopcroft_karp(adj, fs.n_vehicles)

    free = [r for r, v in enumerate(match_l) if v == -1]
    if free:
        S = _violator_from(free[0], adj, match_l, copies, fs)
        raise HallViolation(S, sum(counts[j] for j in S), fs.union_size(S))

    station_of = {fs.vehicle_ids[v]: copies[r] for r, v in enumerate(match_l)}
    return Assignment(fs.company_id, station_of)


def _violator_from(root: int, adj, match_l, copies, fs: FeasibilitySets) -> tuple[int, ...]:
    """Stations reached by alternating paths from an unmatched copy."""
    owner = {v: r for r, v in enumerate(match_l) if v != -1}
    seen_l = {root}
    seen_r: set[int] = set()
    q = deque([root])
    while q:
        r = q.popleft()
        for v in adj[r]:
            if v in seen_r:
                continue
            seen_r.add(v)
            w = owner.get(v)
            if w is not None and w not in seen_l:
                seen_l.add(w)
                q.append(w)
    return tuple(sorted({copies[r] for r in seen_l}))

