"""Open-loop direct-transcription co-design baseline.

All control moves, the initial state, and the plant core are stacked into one
decision vector and optimized against the nominal disturbance profile with
full preview. Constraints (state box at every step, input rate limits) are
handled by an augmented Lagrangian; each inner subproblem is a
bound-constrained quasi-Newton minimization driven by central
finite-difference gradients. All finite-difference probes of one gradient are
integrated as a single batch through the vectorized plant dynamics, which
keeps the 200+ variable problem tractable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from . import plant
from .boxes import BoxSet
from .errors import NoFeasiblePoint
from .plant import PlantParams
from .profiles import DisturbanceProfile
from .rccd import RolloutResult, full_state_box
from .rmpc import RmpcConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TranscriptionVector:
    """Decision variables of the open-loop problem: plant core, x0, all moves."""

    params: PlantParams
    x0: np.ndarray
    U: np.ndarray  # (n_t, 2)

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(5))
        U = np.asarray(self.U, dtype=float)
        object.__setattr__(self, "U", U.reshape(-1, 2))

    @property
    def n_t(self) -> int:
        return self.U.shape[0]

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.params.core(), self.x0, self.U.ravel()])

    @classmethod
    def from_array(cls, arr, n_t: int, c_p: float = plant.CP_WATER) -> "TranscriptionVector":
        arr = np.asarray(arr, dtype=float).reshape(9 + 2 * n_t)
        p = PlantParams(C_c=arr[0], C_h=arr[1], T_f=arr[2], R_s=arr[3], c_p=c_p)
        return cls(params=p, x0=arr[4:9], U=arr[9:].reshape(n_t, 2))


@dataclass
class OlccdOptions:
    viol_tol: float = 1e-4
    max_outer: int = 12
    penalty0: float = 10.0
    penalty_growth: float = 10.0
    penalty_cap: float = 1e8
    inner_maxiter: int = 400
    fd_step: float = 1e-6  # central-difference step in box-scaled coordinates


@dataclass(frozen=True)
class OlccdResult:
    design: TranscriptionVector
    rollout: RolloutResult
    J_sys: float
    max_violation: float
    outer_iterations: int
    evaluations: int


class _ParamBatch(NamedTuple):
    """Array-valued stand-in for PlantParams inside batched rollouts."""

    C_c: np.ndarray
    C_h: np.ndarray
    T_f: np.ndarray
    R_s: np.ndarray
    c_p: float


def _rk4_floored(x, u, d, pb, h):
    # identical to plant.rk4_step but with the recirculation mass floored, so
    # off-design probe trajectories cannot raise mid-gradient
    def f(xx):
        return plant._rates(xx, u, d, pb, np.maximum(xx[..., plant.M_R], plant.EPS_MASS))

    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rollout_batch(pb: _ParamBatch, x0, U, D: DisturbanceProfile, n_sub: int):
    """Simulate S trajectories at once; returns states of shape (S, n_t+1, 5)."""
    S = x0.shape[0]
    n_t = D.n_t
    h = D.tau_s / n_sub
    X = np.empty((S, n_t + 1, 5))
    X[:, 0] = x0
    x = x0
    for k in range(n_t):
        u = U[:, k]
        d = D.samples[k]
        for _ in range(n_sub):
            x = _rk4_floored(x, u, d, pb, h)
        X[:, k + 1] = x
    return X


def _constraint_matrix(X, U, X5: BoxSet, du_max):
    """Inequality residuals g <= 0 for a batch; shape (S, m)."""
    S = X.shape[0]
    parts = []
    Xs = X[:, 1:, :]
    hi = np.isfinite(X5.upper)
    lo = np.isfinite(X5.lower)
    if np.any(hi):
        parts.append((Xs[:, :, hi] - X5.upper[hi]).reshape(S, -1))
    if np.any(lo):
        parts.append((X5.lower[lo] - Xs[:, :, lo]).reshape(S, -1))
    finite_du = np.isfinite(du_max)
    if U.shape[1] >= 2 and np.any(finite_du):
        dU = (U[:, 1:] - U[:, :-1])[:, :, finite_du]
        bound = du_max[finite_du]
        parts.append((dU - bound).reshape(S, -1))
        parts.append((-dU - bound).reshape(S, -1))
    if not parts:
        return np.zeros((S, 0))
    return np.concatenate(parts, axis=1)


def transcribe_and_solve(
    initial: TranscriptionVector,
    bounds: BoxSet,
    D: DisturbanceProfile,
    cfg: RmpcConfig,
    options: OlccdOptions | None = None,
    n_sub: int = 10,
) -> OlccdResult:
    """Solve the open-loop co-design problem for the given profile.

    ``bounds`` covers the full decision vector in :meth:`to_array` layout
    (simple bounds on the plant core, initial state, and every move; they
    also encode the input box). State-box and rate constraints are enforced
    by the augmented Lagrangian to ``options.viol_tol``; failure to reach
    that tolerance raises :class:`NoFeasiblePoint`.
    """
    opt = options or OlccdOptions()
    n_t = initial.n_t
    dim = 9 + 2 * n_t
    if bounds.dim != dim:
        raise ValueError(f"bounds must have dimension {dim}")
    if D.n_t != n_t:
        raise ValueError("profile length differs from transcription length")
    c_p = initial.params.c_p
    X5 = full_state_box(cfg)
    du_max = cfg.du_max

    lower, upper = bounds.lower, bounds.upper
    span = upper - lower
    scale = np.where(span > 0, span, 1.0)

    def decode(V):
        # V: (S, dim) scaled rows -> physical pieces
        P = lower + V * scale
        pb = _ParamBatch(P[:, 0], P[:, 1], P[:, 2], P[:, 3], c_p)
        x0 = P[:, 4:9]
        U = P[:, 9:].reshape(-1, n_t, 2)
        return pb, x0, U

    def objective_batch(pb, x0):
        return (pb.C_c + pb.C_h) / c_p + x0[:, 0] + x0[:, 1]

    evals = 0

    def constraints_batch(V):
        nonlocal evals
        pb, x0, U = decode(V)
        evals += V.shape[0]
        X = _rollout_batch(pb, x0, U, D, n_sub)
        return objective_batch(pb, x0), _constraint_matrix(X, U, X5, du_max)

    mu = None
    rho = opt.penalty0

    def lagrangian_batch(V):
        J, G = constraints_batch(V)
        act = np.maximum(0.0, mu / rho + G)
        return J + 0.5 * rho * np.sum(act**2 - (mu / rho) ** 2, axis=1)

    def fun(v):
        return float(lagrangian_batch(v[None, :])[0])

    eye = np.eye(dim) * opt.fd_step

    def jac(v):
        V = np.concatenate([v[None, :] + eye, v[None, :] - eye])
        L = lagrangian_batch(V)
        return (L[:dim] - L[dim:]) / (2.0 * opt.fd_step)

    v = np.where(span > 0, (initial.to_array() - lower) / scale, 0.0)
    _, G0 = constraints_batch(v[None, :])
    m = G0.shape[1]
    mu = np.zeros(m)
    prev_viol = np.inf
    best = None

    for outer in range(opt.max_outer):
        ftol = max(1e-14, 1e-9 * 0.1**outer)
        gtol = max(1e-8, 1e-5 * 0.1**outer)
        res = minimize(
            fun,
            v,
            jac=jac,
            method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * dim,
            options={"maxiter": opt.inner_maxiter, "ftol": ftol, "gtol": gtol},
        )
        v = res.x
        J, G = constraints_batch(v[None, :])
        viol = float(np.max(G, initial=0.0))
        log.info(
            "olccd outer %d: J=%.6g viol=%.3g rho=%.1g inner_iters=%d",
            outer + 1, float(J[0]), viol, rho, res.nit,
        )
        if viol <= opt.viol_tol:
            if best is None or float(J[0]) < best[1] - 1e-12:
                best = (v.copy(), float(J[0]))
            else:
                break  # feasible and no longer improving
        mu = np.maximum(0.0, mu + rho * G[0])
        if viol > 0.25 * prev_viol and viol > opt.viol_tol:
            rho = min(rho * opt.penalty_growth, opt.penalty_cap)
        prev_viol = min(prev_viol, viol)

    if best is None:
        raise NoFeasiblePoint(
            f"open-loop transcription could not reduce constraint violation below "
            f"{opt.viol_tol:g} (last violation {viol:.3g})"
        )

    v_best = best[0]
    design = TranscriptionVector.from_array(lower + v_best * scale, n_t, c_p)
    rollout = open_loop_replay(design.U, design.x0, D, design.params, cfg, n_sub)
    _, G_final = constraints_batch(v_best[None, :])
    return OlccdResult(
        design=design,
        rollout=rollout,
        J_sys=best[1],
        max_violation=float(np.max(G_final, initial=0.0)),
        outer_iterations=outer + 1,
        evaluations=evals,
    )


def open_loop_replay(
    U_star: np.ndarray,
    x0: np.ndarray,
    D_actual: DisturbanceProfile,
    p: PlantParams,
    cfg: RmpcConfig,
    n_sub: int = 10,
) -> RolloutResult:
    """Play the stored open-loop moves verbatim against an actual profile.

    There is no feedback to correct with: the moves were optimized for one
    profile, so state excursions under any other profile are simply recorded.
    """
    U_star = np.asarray(U_star, dtype=float).reshape(-1, 2)
    if U_star.shape[0] != D_actual.n_t:
        raise ValueError("move count differs from profile length")
    X5 = full_state_box(cfg)
    x = np.asarray(x0, dtype=float).copy()
    traj = [x.copy()]
    viols = []
    first_bad = None
    diagnostic = ""
    for k in range(1, D_actual.n_t + 1):
        try:
            x = plant.simulate_interval(x, U_star[k - 1], D_actual.step(k), p, D_actual.tau_s, n_sub)
        except Exception as exc:  # violations are data, not errors
            if first_bad is None:
                first_bad = k
            diagnostic = f"simulation failed at step {k}: {exc}"
            break
        traj.append(x.copy())
        v = X5.violation(x)
        v[v <= 1e-9] = 0.0
        viols.append(v)
        if np.any(v > 0) and first_bad is None:
            first_bad = k
    steps = len(traj) - 1
    return RolloutResult(
        feasible=first_bad is None,
        J_sys=(p.C_c + p.C_h) / p.c_p + float(x0[0]) + float(x0[1]),
        trajectory=np.array(traj),
        applied_u=U_star[:steps],
        schedules=None,
        h=np.zeros(steps, dtype=int),
        state_violation=np.array(viols).reshape(len(viols), 5),
        first_infeasible_k=first_bad,
        diagnostic=diagnostic,
    )
