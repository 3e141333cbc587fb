"""Bound-constrained pattern search with an extreme barrier.

The search polls coordinate directions on a mesh in box-scaled coordinates,
accepts only strict improvements, and halves the mesh after an unsuccessful
poll. Infeasible candidates are given an infinite objective (the extreme
barrier), so the incumbent is always the best feasible point seen. The poll
order is fixed and every poll is evaluated in full, so the search is
deterministic; repeated points are served from a cache without consuming
evaluation budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SearchOptions:
    mesh0: float = 0.25
    mesh_max: float = 0.5
    mesh_tol: float = 1e-3
    obj_tol: float = 1e-4
    budget: int = 5000
    expand: float = 2.0
    shrink: float = 0.5


@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    evaluations: int
    iterations: int
    stopped_by: str  # "mesh", "objective", or "budget"


def pattern_search(func, x0, lower, upper, options: SearchOptions | None = None) -> SearchResult:
    """Minimize ``func`` over the box ``[lower, upper]``.

    ``func`` may return ``inf`` to veto a point. Variables are scaled by
    their bounds to [0, 1] before polling; pinned variables (equal bounds)
    never move. Poll candidates are clipped to the box, so bound-seeking
    coordinates land exactly on their bounds.
    """
    opt = options or SearchOptions()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < lower - 1e-12) or np.any(x0 > upper + 1e-12):
        raise ValueError("initial point outside bounds")

    span = upper - lower
    free = span > 0
    scale = np.where(free, span, 1.0)

    def to_phys(s):
        return lower + s * scale

    cache: dict[tuple, float] = {}
    evals = 0

    def evaluate(s):
        nonlocal evals
        key = tuple(s)
        if key in cache:
            return cache[key]
        if evals >= opt.budget:
            return None  # budget exhausted
        evals += 1
        v = float(func(to_phys(s)))
        cache[key] = v
        return v

    s_inc = np.where(free, (x0 - lower) / scale, 0.0)
    f_inc = evaluate(s_inc)
    if f_inc is None:
        raise ValueError("evaluation budget must allow at least one evaluation")

    mesh = opt.mesh0
    dims = np.flatnonzero(free)
    iterations = 0
    stopped_by = "budget"
    while True:
        if evals >= opt.budget:
            stopped_by = "budget"
            break
        iterations += 1
        best_f = np.inf
        best_s = None
        exhausted = False
        for i in dims:
            for sign in (+1.0, -1.0):
                cand = s_inc.copy()
                cand[i] = min(1.0, max(0.0, cand[i] + sign * mesh))
                if cand[i] == s_inc[i]:
                    continue
                v = evaluate(cand)
                if v is None:
                    exhausted = True
                    break
                if v < best_f:
                    best_f = v
                    best_s = cand
            if exhausted:
                break

        if best_s is not None and best_f < f_inc:
            improvement = f_inc - best_f
            s_inc, f_inc = best_s, best_f
            mesh = min(mesh * opt.expand, opt.mesh_max)
            if np.isfinite(improvement) and improvement < opt.obj_tol:
                stopped_by = "objective"
                break
        elif exhausted:
            stopped_by = "budget"
            break
        else:
            mesh *= opt.shrink
            if mesh < opt.mesh_tol:
                stopped_by = "mesh"
                break

    return SearchResult(
        x=to_phys(s_inc),
        value=f_inc,
        evaluations=evals,
        iterations=iterations,
        stopped_by=stopped_by,
    )
