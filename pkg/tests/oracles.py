"""Independent reference computations used only by the tests.

Nothing here imports the solver internals; each oracle re-derives its
answer by brute force or by a closed form.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product

import numpy as np
from scipy.optimize import linprog


def matching_exists(counts, sets, vehicle_ids) -> bool:
    """Backtracking search for an assignment of every vehicle to a reachable
    station with exactly ``counts[j]`` vehicles at station j."""
    if sum(counts) != len(vehicle_ids):
        return False
    remaining = list(counts)
    options = [[j for j, S in enumerate(sets) if v in S] for v in vehicle_ids]
    order = sorted(range(len(vehicle_ids)), key=lambda k: len(options[k]))

    def place(pos: int) -> bool:
        if pos == len(order):
            return True
        for j in options[order[pos]]:
            if remaining[j] > 0:
                remaining[j] -= 1
                if place(pos + 1):
                    return True
                remaining[j] += 1
        return False

    return place(0)


def compositions(n: int, m: int):
    """All length-m nonnegative integer vectors summing to n."""
    for cuts in combinations(range(n + m - 1), m - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(n + m - 1 - prev - 1)
        yield tuple(out)


def polytope_rows(sets, n):
    """Dense (G, h) of the tightened polytope, rebuilt from scratch."""
    m = len(sets)
    G, h = [], []
    for size in range(1, m):
        for S in combinations(range(m), size):
            row = np.zeros(m)
            row[list(S)] = n
            G.append(row)
            h.append(max(0, len(set().union(*(sets[j] for j in S))) - size))
    return np.array(G).reshape(-1, m), np.array(h, dtype=float)


def random_vertices(sets, n, rng, k: int):
    """Up to k polytope vertices from LPs with random costs (None if empty)."""
    m = len(sets)
    G, h = polytope_rows(sets, n)
    out = []
    for _ in range(k):
        res = linprog(
            rng.normal(size=m),
            A_ub=G if len(h) else None,
            b_ub=h if len(h) else None,
            A_eq=np.ones((1, m)),
            b_eq=[1.0],
            bounds=[(0, None)] * m,
            method="highs",
        )
        if res.status == 2:
            return None
        out.append(np.clip(res.x, 0.0, None))
    return out


def random_members(sets, n, rng, k: int):
    """Vertices plus random convex combinations of them."""
    verts = random_vertices(sets, n, rng, max(2, k))
    if verts is None:
        return None
    V = np.array(verts)
    pts = list(V)
    for _ in range(k):
        w = rng.dirichlet(np.ones(len(V)))
        pts.append(w @ V)
    return pts


def grid_projection(y, G, h, steps: int):
    """Nearest feasible point of a 2- or 3-station polytope on the grid of
    spacing 1/steps (pick steps divisible by N so vertices lie on it)."""
    y = np.asarray(y, dtype=float)
    m = len(y)
    best, best_d = None, np.inf
    for head in product(range(steps + 1), repeat=m - 1):
        if sum(head) > steps:
            continue
        z = np.array(list(head) + [steps - sum(head)], dtype=float) / steps
        if len(h) and np.any(G @ z > h + 1e-12):
            continue
        d = np.sum((z - y) ** 2)
        if d < best_d:
            best, best_d = z, d
    return best


def central_difference(f, x, h: float = 1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def closed_form_lambda(fleet_sizes, A_G) -> float:
    """Largest eigenvalue of N N^T (x) diag(A_G): |N|^2 max(A_G)."""
    n = np.asarray(fleet_sizes, dtype=float)
    return float(n @ n) * float(np.max(A_G))


def tracking_loss(sigma, A_G, target) -> float:
    r = np.asarray(sigma, dtype=float) - np.asarray(target, dtype=float)
    return 0.5 * float(np.sum(np.asarray(A_G) * r * r))


def largest_remainder(x, n):
    """Exact-arithmetic largest remainder, ties to the lower index."""
    y = [Fraction(v).limit_denominator(10**9) * n for v in x]
    floors = [int(v) for v in y]
    deficit = n - sum(floors)
    order = sorted(range(len(y)), key=lambda j: (-(y[j] - floors[j]), j))
    for j in order[:deficit]:
        floors[j] += 1
    return tuple(floors)
