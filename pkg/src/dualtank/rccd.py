"""Robust control co-design: outer design search around a per-step robust MPC.

The inner rollout walks the mission timeline. At each step it linearizes the
plant at the current operating point, discretizes, drops the uncontrollable
reservoir-mass state, synthesizes an LQR gain, and solves the tightened
robust MPC problem. A feasible step applies the first feedforward move plus
scheduled feedback on the nonlinear plant; an infeasible step condemns the
whole candidate design. The outer loop searches plant parameters, initial
state, and initial input with a pattern search under an extreme barrier, so
only designs whose entire rollout stays feasible are ever accepted.

A finished design is a schedule: per-step feedforward moves, gains, and
linearization points that replay in closed loop without any online
optimization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import plant
from .boxes import BoxSet
from .errors import (
    DegenerateFlow,
    NoFeasiblePoint,
    NotControllable,
    RiccatiDiverged,
    SingularMass,
)
from .patternsearch import SearchOptions, SearchResult, pattern_search
from .plant import PlantParams
from .profiles import DisturbanceProfile
from .rmpc import RmpcConfig, solve_rmpc
from .synthesis import dlqr, extract_controllable, linearize_discretize

log = logging.getLogger(__name__)

#: tolerance for the outer-loop state-box membership test (float noise only)
STATE_TOL = 1e-9


@dataclass(frozen=True)
class LqrConfig:
    """Weights for the scheduled LQR gains over [M_r, T_h, T_c, T_r]."""

    Q: np.ndarray = field(default_factory=lambda: np.diag([1.0, 10.0, 10.0, 10.0]))
    R: np.ndarray = field(default_factory=lambda: np.eye(2))


@dataclass(frozen=True)
class DesignVector:
    """Outer-loop decision variables: plant core, initial state, initial input."""

    params: PlantParams
    x0: np.ndarray
    u0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(5))
        object.__setattr__(self, "u0", np.asarray(self.u0, dtype=float).reshape(2))

    def to_array(self) -> np.ndarray:
        """[C_c, C_h, T_f, R_s, M_f0, M_r0, T_h0, T_c0, T_r0, mdot_f0, mdot_r0]"""
        return np.concatenate([self.params.core(), self.x0, self.u0])

    @classmethod
    def from_array(cls, arr, c_p: float = plant.CP_WATER) -> "DesignVector":
        arr = np.asarray(arr, dtype=float).reshape(11)
        p = PlantParams(C_c=arr[0], C_h=arr[1], T_f=arr[2], R_s=arr[3], c_p=c_p)
        return cls(params=p, x0=arr[4:9], u0=arr[9:11])


@dataclass(frozen=True)
class Schedules:
    """Sample-scheduled feedforward moves, gains, and linearization points."""

    C_star: np.ndarray  # (n_t, 2)
    K_star: np.ndarray  # (n_t, 2, 4)
    lin_x: np.ndarray   # (n_t, 4) reduced-state linearization points
    lin_u: np.ndarray   # (n_t, 2) input linearization points

    @property
    def n_t(self) -> int:
        return self.C_star.shape[0]


@dataclass(frozen=True)
class RolloutResult:
    """Outcome of walking a candidate design through the mission."""

    feasible: bool
    J_sys: float
    trajectory: np.ndarray        # (steps+1, 5)
    applied_u: np.ndarray         # (steps, 2)
    schedules: Schedules | None
    h: np.ndarray                 # (steps,) rMPC infeasibility flags
    state_violation: np.ndarray   # (steps, 5) per-component excess outside X
    first_infeasible_k: int | None = None
    diagnostic: str = ""

    @property
    def steps(self) -> int:
        return self.applied_u.shape[0]


def objective(dv: DesignVector, c_p: float | None = None) -> float:
    """Initial working-fluid mass: (C_c + C_h)/c_p + M_f0 + M_r0, kg."""
    cp = dv.params.c_p if c_p is None else c_p
    return (dv.params.C_c + dv.params.C_h) / cp + float(dv.x0[0]) + float(dv.x0[1])


def full_state_box(cfg: RmpcConfig) -> BoxSet:
    """The 5-state box (reservoir-mass bounds stacked on the reduced box)."""
    return BoxSet(
        np.concatenate([cfg.Mf_box.lower, cfg.X_box.lower]),
        np.concatenate([cfg.Mf_box.upper, cfg.X_box.upper]),
    )


#: Riccati iteration budget inside rollouts. The plant's weakly regulated
#: modes sit near the unit circle, so a cold start can need >10k iterations;
#: warm starts (across steps and across rollouts) keep the typical cost tiny.
ROLLOUT_RICCATI_ITERS = 50_000


def inner_rollout(
    dv: DesignVector,
    D: DisturbanceProfile,
    cfg: RmpcConfig,
    lqr_cfg: LqrConfig | None = None,
    n_sub: int = 10,
    warm_cache: dict | None = None,
) -> RolloutResult:
    """Run the per-step synthesis loop for one candidate design.

    Short-circuits at the first infeasible step (rMPC infeasibility, a model
    singularity, or a simulated state outside the box), recording which step
    failed; the outer barrier only needs the verdict. ``warm_cache`` lets a
    caller seed the Riccati iteration from a previous rollout; it only
    changes iteration counts, not the fixed point.
    """
    lqr_cfg = lqr_cfg or LqrConfig()
    p = dv.params
    n_t = D.n_t
    tau = D.tau_s
    X5 = full_state_box(cfg)

    x = dv.x0.copy()
    u_prev = dv.u0.copy()
    traj = [x.copy()]
    applied, c_list, k_list, lx_list, lu_list = [], [], [], [], []
    h_flags, viols = [], []
    first_bad = None
    diagnostic = ""
    P_warm = warm_cache.get("P") if warm_cache else None
    warm_C = None

    for k in range(1, n_t + 1):
        d_k = D.step(k)
        preview = D.preview(k, cfg.N_p)
        try:
            model5 = linearize_discretize(x, u_prev, d_k, p, tau)
            model = extract_controllable(model5)
            K, P_warm = dlqr(
                model.A, model.B_u, lqr_cfg.Q, lqr_cfg.R,
                max_iter=ROLLOUT_RICCATI_ITERS, P0=P_warm,
            )
            if k == 1 and warm_cache is not None:
                warm_cache["P"] = P_warm
        except (NotControllable, RiccatiDiverged, SingularMass, DegenerateFlow) as exc:
            h_flags.append(1)
            first_bad = k
            diagnostic = f"synthesis failed at step {k}: {exc}"
            break

        sol = solve_rmpc(model, K, x[1:], float(x[0]), u_prev, preview, cfg, warm_start=warm_C)
        h_flags.append(0 if sol.feasible else 1)
        if not sol.feasible:
            first_bad = k
            diagnostic = f"rMPC infeasible at step {k}"
            break

        u_k = sol.first_move + K @ (x[1:] - model.x_e) + model.u_e
        u_k = cfg.U_box.clip(u_k)

        try:
            x_next = plant.simulate_interval(x, u_k, d_k, p, tau, n_sub)
        except (SingularMass, DegenerateFlow) as exc:
            first_bad = k
            diagnostic = f"simulation failed at step {k}: {exc}"
            break

        c_list.append(sol.first_move)
        k_list.append(K)
        lx_list.append(model.x_e)
        lu_list.append(model.u_e)
        applied.append(u_k)
        traj.append(x_next)
        v = X5.violation(x_next)
        v[v <= STATE_TOL] = 0.0
        viols.append(v)
        if np.any(v > 0):
            first_bad = k
            diagnostic = f"state left X at step {k}"
            break

        x = x_next
        u_prev = u_k
        warm_C = np.concatenate([sol.C[1:], sol.C[-1:]]).ravel()

    feasible = first_bad is None
    schedules = None
    if c_list:
        schedules = Schedules(
            C_star=np.array(c_list),
            K_star=np.array(k_list),
            lin_x=np.array(lx_list),
            lin_u=np.array(lu_list),
        )
    return RolloutResult(
        feasible=feasible,
        J_sys=objective(dv),
        trajectory=np.array(traj),
        applied_u=np.array(applied).reshape(len(applied), 2),
        schedules=schedules,
        h=np.array(h_flags, dtype=int),
        state_violation=np.array(viols).reshape(len(viols), 5),
        first_infeasible_k=first_bad,
        diagnostic=diagnostic,
    )


def closed_loop_replay(
    schedules: Schedules,
    x0: np.ndarray,
    D_actual: DisturbanceProfile,
    p: PlantParams,
    cfg: RmpcConfig,
    n_sub: int = 10,
) -> RolloutResult:
    """Play a stored design schedule against an actual disturbance profile.

    No online optimization happens here: the input is the scheduled
    feedforward move plus scheduled feedback about the stored linearization
    point, clipped to the input box and the per-step rate limit. State
    excursions outside the box are recorded as violations, not errors.
    """
    if schedules.n_t != D_actual.n_t:
        raise ValueError(
            f"schedule length {schedules.n_t} != profile length {D_actual.n_t}"
        )
    X5 = full_state_box(cfg)
    x = np.asarray(x0, dtype=float).copy()
    u_prev = schedules.lin_u[0].copy()
    traj = [x.copy()]
    applied, viols = [], []
    first_bad = None
    diagnostic = ""

    for k in range(1, schedules.n_t + 1):
        u = (
            schedules.C_star[k - 1]
            + schedules.K_star[k - 1] @ (x[1:] - schedules.lin_x[k - 1])
            + schedules.lin_u[k - 1]
        )
        lo = np.maximum(cfg.U_box.lower, u_prev - cfg.du_max)
        hi = np.minimum(cfg.U_box.upper, u_prev + cfg.du_max)
        u = np.clip(u, lo, hi)

        try:
            x_next = plant.simulate_interval(x, u, D_actual.step(k), p, D_actual.tau_s, n_sub)
        except (SingularMass, DegenerateFlow) as exc:
            if first_bad is None:
                first_bad = k
            diagnostic = f"simulation failed at step {k}: {exc}"
            break

        applied.append(u)
        traj.append(x_next)
        v = X5.violation(x_next)
        v[v <= STATE_TOL] = 0.0
        viols.append(v)
        if np.any(v > 0) and first_bad is None:
            first_bad = k
        x = x_next
        u_prev = u

    viol_arr = np.array(viols).reshape(len(viols), 5)
    return RolloutResult(
        feasible=first_bad is None,
        J_sys=(p.C_c + p.C_h) / p.c_p + float(x0[0]) + float(x0[1]),
        trajectory=np.array(traj),
        applied_u=np.array(applied).reshape(len(applied), 2),
        schedules=schedules,
        h=np.zeros(len(applied), dtype=int),
        state_violation=viol_arr,
        first_infeasible_k=first_bad,
        diagnostic=diagnostic,
    )


@dataclass(frozen=True)
class OuterResult:
    """Best feasible design found by the outer search."""

    design: DesignVector
    rollout: RolloutResult
    J_sys: float
    evaluations: int
    stopped_by: str


def outer_optimize(
    initial: DesignVector,
    bounds: BoxSet,
    D: DisturbanceProfile,
    cfg: RmpcConfig,
    lqr_cfg: LqrConfig | None = None,
    n_sub: int = 10,
    options: SearchOptions | None = None,
) -> OuterResult:
    """Search the 11 design variables under the extreme feasibility barrier.

    ``bounds`` is the box over the :meth:`DesignVector.to_array` layout.
    Raises :class:`NoFeasiblePoint` when no polled design ever produces a
    feasible rollout within the evaluation budget.
    """
    if bounds.dim != 11:
        raise ValueError("design bounds must be 11-dimensional")
    lqr_cfg = lqr_cfg or LqrConfig()
    c_p = initial.params.c_p

    last_infeasible: dict = {"k": None, "diag": ""}
    warm: dict = {}

    def barrier(arr):
        dv = DesignVector.from_array(arr, c_p)
        rr = inner_rollout(dv, D, cfg, lqr_cfg, n_sub, warm_cache=warm)
        if not rr.feasible:
            last_infeasible["k"] = rr.first_infeasible_k
            last_infeasible["diag"] = rr.diagnostic
            return np.inf
        return rr.J_sys

    result: SearchResult = pattern_search(
        barrier, initial.to_array(), bounds.lower, bounds.upper, options
    )
    if not np.isfinite(result.value):
        raise NoFeasiblePoint(
            "no feasible design found within the evaluation budget "
            f"({result.evaluations} rollouts); last diagnostic: {last_infeasible['diag']}",
            first_infeasible_k=last_infeasible["k"],
        )

    best = DesignVector.from_array(result.x, c_p)
    rollout = inner_rollout(best, D, cfg, lqr_cfg, n_sub, warm_cache=warm)
    log.info(
        "outer search: J=%.6g kg after %d rollouts (stopped by %s)",
        result.value, result.evaluations, result.stopped_by,
    )
    return OuterResult(
        design=best,
        rollout=rollout,
        J_sys=result.value,
        evaluations=result.evaluations,
        stopped_by=result.stopped_by,
    )
