"""Dense convex QP solver with inequality constraints and infeasibility detection.

Problems are small (tens of variables, a few hundred rows), so a primal
active-set method with direct KKT solves is both fast and exact at the
optimum. Feasibility is certified by a phase-1 linear program minimizing the
maximum constraint violation; its optimal slack doubles as an infeasibility
margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog


class QpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class QuadraticProgram:
    """min 0.5 z'Hz + g'z  subject to  A_in z <= b_in.

    ``H`` must be symmetric positive semidefinite (to numerical tolerance);
    a ridge of 1e-10 is added internally when its smallest eigenvalue drops
    below 1e-10, keeping factorizations stable.
    """

    H: np.ndarray
    g: np.ndarray
    A_in: np.ndarray
    b_in: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        A = np.asarray(self.A_in, dtype=float).reshape(-1, H.shape[0])
        b = np.atleast_1d(np.asarray(self.b_in, dtype=float))
        if H.shape[0] != H.shape[1] or H.shape[0] != g.size:
            raise ValueError("H/g dimensions inconsistent")
        if not np.allclose(H, H.T, atol=1e-10):
            raise ValueError("H must be symmetric")
        if A.shape[0] != b.size:
            raise ValueError("A_in/b_in row counts differ")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "A_in", A)
        object.__setattr__(self, "b_in", b)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.A_in.shape[0]


@dataclass(frozen=True)
class QpSolution:
    z: np.ndarray
    objective: float
    status: QpStatus
    max_violation: float
    multipliers: np.ndarray


class Phase1Result(NamedTuple):
    feasible: bool
    max_slack: float
    z: np.ndarray


def phase1_feasibility(A_in, b_in, feas_tol: float = 1e-6) -> Phase1Result:
    """Minimize the worst constraint violation with one slack variable.

    Solves ``min s  s.t.  A_in z - s <= b_in, s >= 0``; the set is feasible
    iff the optimal slack is at most ``feas_tol``. The minimizing point is
    returned as a start for the active-set phase.
    """
    A_in = np.asarray(A_in, dtype=float)
    b_in = np.atleast_1d(np.asarray(b_in, dtype=float))
    if A_in.size == 0 or b_in.size == 0:
        n = A_in.shape[1] if A_in.ndim == 2 else 0
        return Phase1Result(True, 0.0, np.zeros(n))
    m, n = A_in.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([A_in, -np.ones((m, 1))])
    bounds = [(None, None)] * n + [(0.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_in, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"phase-1 LP failed: {res.message}")
    slack = float(res.x[-1])
    return Phase1Result(slack <= feas_tol, slack, res.x[:n])


def _kkt_step(H_reg, grad, A_act):
    """Equality-constrained step: min 0.5 p'Hp + grad'p s.t. A_act p = 0."""
    n = H_reg.shape[0]
    k = A_act.shape[0]
    if k == 0:
        try:
            return np.linalg.solve(H_reg, -grad), np.empty(0)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(H_reg, -grad, rcond=None)[0], np.empty(0)
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = H_reg
    kkt[:n, n:] = A_act.T
    kkt[n:, :n] = A_act
    rhs = np.concatenate([-grad, np.zeros(k)])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def solve_qp(
    qp: QuadraticProgram,
    feas_tol: float = 1e-6,
    max_iter: int = 500,
    z0: np.ndarray | None = None,
) -> QpSolution:
    """Solve the QP, detecting infeasibility via phase 1.

    An optional ``z0`` skips phase 1 when it already satisfies the
    constraints to ``feas_tol``. ``MAX_ITER`` is returned when the working-set
    loop exhausts its budget; callers treat that verdict as infeasible,
    conservatively.
    """
    H, g, A, b = qp.H, qp.g, qp.A_in, qp.b_in
    n, m = qp.n, qp.m

    H_reg = H
    if n > 0:
        min_eig = float(np.min(np.linalg.eigvalsh(H)))
        if min_eig < 1e-10:
            H_reg = H + 1e-10 * np.eye(n)

    z = None
    if z0 is not None:
        z0 = np.asarray(z0, dtype=float)
        if m == 0 or float(np.max(A @ z0 - b, initial=0.0)) <= feas_tol:
            z = z0.copy()
    if z is None:
        if m == 0:
            z = np.zeros(n)
        else:
            ph1 = phase1_feasibility(A, b, feas_tol)
            if not ph1.feasible:
                return QpSolution(
                    z=ph1.z,
                    objective=float(0.5 * ph1.z @ H @ ph1.z + g @ ph1.z),
                    status=QpStatus.INFEASIBLE,
                    max_violation=ph1.max_slack,
                    multipliers=np.zeros(m),
                )
            z = ph1.z.copy()

    # seed the working set with constraints already on their bounds; this
    # usually lets warm-started solves finish in a couple of iterations
    work: list[int] = []
    if m:
        resid = A @ z - b
        near = np.flatnonzero(resid >= -1e-10)
        if near.size:
            order = np.argsort(-resid[near], kind="stable")
            work = [int(i) for i in near[order][: max(n - 1, 0)]]
    lam_full = np.zeros(m)
    status = QpStatus.MAX_ITER
    for _ in range(max_iter):
        grad = H_reg @ z + g
        A_act = A[work] if work else np.empty((0, n))
        p, lam = _kkt_step(H_reg, grad, A_act)

        if np.max(np.abs(p), initial=0.0) <= 1e-11:
            if len(work) == 0 or np.min(lam) >= -1e-9:
                lam_full = np.zeros(m)
                lam_full[work] = np.maximum(lam, 0.0)
                status = QpStatus.OPTIMAL
                break
            work.pop(int(np.argmin(lam)))
            continue

        # ratio test over rows not in the working set
        alpha = 1.0
        blocking = -1
        if m:
            mask = np.ones(m, dtype=bool)
            mask[work] = False
            Ap = A[mask] @ p
            rows = np.flatnonzero(mask)
            pos = Ap > 1e-12
            if np.any(pos):
                ratios = (b[rows[pos]] - A[rows[pos]] @ z) / Ap[pos]
                ratios = np.maximum(ratios, 0.0)
                j = int(np.argmin(ratios))
                if ratios[j] < alpha:
                    alpha = float(ratios[j])
                    blocking = int(rows[pos][j])
        z = z + alpha * p
        if blocking >= 0:
            work.append(blocking)

    max_violation = float(np.max(A @ z - b, initial=0.0)) if m else 0.0
    return QpSolution(
        z=z,
        objective=float(0.5 * z @ H @ z + g @ z),
        status=status,
        max_violation=max(max_violation, 0.0),
        multipliers=lam_full,
    )
