"""Euclidean projection onto an allocation polytope.

Primal active-set method for ``min 0.5|z - y|^2  s.t.  sum(z) = 1, G z <= h``.
Since the Hessian is the identity, the equality-constrained subproblem for a
working set W has the closed form ``z = Py + r`` with multipliers
``Ly + l``; these are cached per working set, and the last optimal working
set is tried first, so repeated projections of nearby points (as in the
fixed-point iteration) usually cost a few matrix-vector products.
"""
from __future__ import annotations

import numpy as np

from .feasibility import EmptyFeasibleSetError, FeasibleSet


class ProjectionError(RuntimeError):
    pass


class Projector:
    def __init__(self, K: FeasibleSet, max_iter: int | None = None):
        if K.witness is None:
            raise EmptyFeasibleSetError("cannot project onto an empty feasible set")
        self.K = K
        self.G = np.asarray(K.G)
        self.h = np.asarray(K.h)
        self.max_iter = max_iter or 50 * (len(self.h) + 1)
        self._cache: dict[tuple[int, ...], tuple] = {}
        self._last: tuple[int, ...] = ()

    def _eqp(self, W: tuple[int, ...]):
        hit = self._cache.get(W)
        if hit is not None:
            return hit
        m = self.K.m
        A = np.vstack([np.ones((1, m)), self.G[list(W)]])
        b = np.concatenate([[1.0], self.h[list(W)]])
        AAt_inv = np.linalg.inv(A @ A.T)
        L = AAt_inv @ A
        l = AAt_inv @ b
        P = np.eye(m) - A.T @ L
        r = A.T @ l
        hit = (P, r, L, l)
        self._cache[W] = hit
        return hit

    def _solve(self, W, y):
        P, r, L, l = self._eqp(W)
        return P @ y + r, L @ y - l

    def _independent(self, rows) -> list[int]:
        """Greedy subset of ``rows`` whose normals, with the sum row, are independent."""
        chosen: list[int] = []
        basis = np.ones((1, self.K.m))
        for r in rows:
            trial = np.vstack([basis, self.G[r]])
            if np.linalg.matrix_rank(trial, tol=1e-10) == trial.shape[0]:
                basis = trial
                chosen.append(r)
            if basis.shape[0] == self.K.m:
                break
        return chosen

    def _independent_of(self, work, row) -> bool:
        A = np.vstack([np.ones((1, self.K.m)), self.G[list(work) + [row]]])
        return np.linalg.matrix_rank(A, tol=1e-10) == A.shape[0]

    def __call__(self, y, start=None) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        scale = max(1.0, float(np.max(np.abs(y))))
        tol = 1e-12 * scale

        W = self._last
        z, mu = self._solve(W, y)
        if np.all(self.G @ z <= self.h + 1e-12) and (mu.size == 1 or mu[1:].min() >= -tol):
            return z

        z = np.array(self.K.witness if start is None else start, dtype=float)
        slack = self.h - self.G @ z
        active = [int(r) for r in np.flatnonzero(slack <= 1e-12)]
        # prefer rows of the last optimal working set
        active.sort(key=lambda r: (r not in self._last, r))
        work = self._independent(active)

        for _ in range(self.max_iter):
            W = tuple(sorted(work))
            zw, mu = self._solve(W, y)
            p = zw - z
            if np.max(np.abs(p)) <= tol:
                ineq = mu[1:]
                if ineq.size == 0 or ineq.min() >= -tol:
                    self._last = W
                    return zw
                work.remove(W[int(np.argmin(ineq))])
                continue
            Gp = self.G @ p
            mask = Gp > 1e-14
            if work:
                mask[list(work)] = False
            alpha = 1.0
            block = -1
            if mask.any():
                idx = np.flatnonzero(mask)
                ratios = np.maximum(self.h[idx] - self.G[idx] @ z, 0.0) / Gp[idx]
                for k in np.argsort(ratios, kind="stable"):
                    if ratios[k] >= 1.0:
                        break
                    # rows dependent on the working set only block through rounding noise
                    if self._independent_of(work, int(idx[k])):
                        alpha = float(ratios[k])
                        block = int(idx[k])
                        break
            if block < 0:
                z = zw
            else:
                z = z + alpha * p
                work.append(block)
        raise ProjectionError(f"active-set projection did not terminate in {self.max_iter} iterations")


def projector(K: FeasibleSet) -> Projector:
    """Projector bound to ``K`` (one per feasible set, created on first use)."""
    proj = K.__dict__.get("_projector")
    if proj is None:
        proj = Projector(K)
        K.__dict__["_projector"] = proj
    return proj


def project(y, K: FeasibleSet, start=None) -> np.ndarray:
    if K.witness is None:
        raise EmptyFeasibleSetError("cannot project onto an empty feasible set")
    return projector(K)(y, start=start)
