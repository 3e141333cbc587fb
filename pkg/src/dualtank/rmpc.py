"""Robust MPC step: pre-stabilized prediction, constraint tightening, QP solve.

The controller parameterizes the input over an ``N_p``-step horizon as
``u_i = c_i + K (x_i - x_e) + u_e`` with a fixed per-step LQR gain ``K``, so
every predicted state and input is affine in the feedforward moves ``C`` and
in the disturbance perturbations ``w_j`` drawn from a box. Because the
control-effort objective does not involve ``w``, the min-max problem reduces
exactly to a nominal QP whose constraint rows are tightened by the box
support function of their disturbance terms: a row ``a'z + sum_j v_j'w_j <= b``
holds for every ``w`` in the box iff
``a'z <= b - sum_j (v_j' w_center + |v_j|' w_halfwidth)``.

Tightening is exact for boxes, which the vertex-enumeration oracle in this
module verifies by brute force.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boxes import BoxSet
from .qp import QpSolution, QpStatus, QuadraticProgram, solve_qp
from .synthesis import AffineModel


class TooLarge(ValueError):
    """Vertex enumeration would exceed the tractability guard."""


def _default_w_box() -> BoxSet:
    return BoxSet(np.array([-1.0, -1.0, -0.01]), np.array([1.0, 1.0, 0.01]))


def _default_x_box() -> BoxSet:
    # running bounds over [M_r, T_h, T_c, T_r]; only the heater corridor binds
    return BoxSet(
        np.array([0.05, 45.0, -np.inf, -np.inf]),
        np.array([np.inf, 50.0, np.inf, np.inf]),
    )


def _default_u_box() -> BoxSet:
    return BoxSet(np.zeros(2), np.array([0.2, 0.3]))


def _default_mf_box() -> BoxSet:
    return BoxSet(np.array([-np.inf]), np.array([np.inf]))


@dataclass(frozen=True)
class RmpcConfig:
    """Horizon, weights, and bounding boxes for one robust MPC solve."""

    N_p: int = 10
    R_eff: np.ndarray = field(default_factory=lambda: np.eye(2))
    X_box: BoxSet = field(default_factory=_default_x_box)
    U_box: BoxSet = field(default_factory=_default_u_box)
    du_max: np.ndarray = field(default_factory=lambda: np.full(2, np.inf))
    W_box: BoxSet = field(default_factory=_default_w_box)
    Mf_box: BoxSet = field(default_factory=_default_mf_box)
    feas_tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self):
        if self.N_p < 1:
            raise ValueError("N_p must be >= 1")
        R = np.atleast_2d(np.asarray(self.R_eff, dtype=float))
        if np.any(np.linalg.eigvalsh(0.5 * (R + R.T)) <= 0):
            raise ValueError("R_eff must be positive definite")
        object.__setattr__(self, "R_eff", R)
        object.__setattr__(self, "du_max", np.atleast_1d(np.asarray(self.du_max, dtype=float)))


@dataclass(frozen=True)
class PredictionMaps:
    """Stacked affine maps from (C, w) to predicted states, inputs, and M_f.

    Predicted quantities for horizon index ``i`` (1-based, stored at
    ``i - 1``) are affine in the stacked feedforward vector ``z`` of length
    ``N_p * n_u`` and in each step's disturbance perturbation ``w_j``:

        s_i  = Sc[i-1] z + Ss[i-1] + sum_j Sw[i-1, j-1] w_j
        u_i  = Uc[i-1] z + Us[i-1] + sum_j Uw[i-1, j-1] w_j
        Mf_i = Fc[i-1] z + Fs[i-1] + sum_j Fw[i-1, j-1] w_j   (when tracked)
    """

    Sc: np.ndarray
    Ss: np.ndarray
    Sw: np.ndarray
    Uc: np.ndarray
    Us: np.ndarray
    Uw: np.ndarray
    u_prev: np.ndarray
    tau_s: float
    Fc: np.ndarray | None = None
    Fs: np.ndarray | None = None
    Fw: np.ndarray | None = None

    @property
    def N_p(self) -> int:
        return self.Sc.shape[0]

    @property
    def n_x(self) -> int:
        return self.Sc.shape[1]

    @property
    def n_u(self) -> int:
        return self.Uc.shape[1]

    @property
    def n_w(self) -> int:
        return self.Sw.shape[3]

    @property
    def n_z(self) -> int:
        return self.Sc.shape[2]


@dataclass(frozen=True)
class RmpcSolution:
    """Feasibility verdict and feedforward plan from one robust MPC solve."""

    feasible: bool
    C: np.ndarray | None
    first_move: np.ndarray | None
    objective: float
    qp_solution: QpSolution


def build_prediction(
    model: AffineModel,
    K: np.ndarray,
    x_k: np.ndarray,
    u_prev: np.ndarray,
    d_preview: np.ndarray,
    cfg: RmpcConfig,
    M_f_k: float | None = None,
) -> PredictionMaps:
    """Roll the pre-stabilized affine dynamics into stacked (C, w) maps.

    ``d_preview`` holds the nominal disturbance for each of the ``N_p``
    horizon steps (the caller pads by holding the last sample near mission
    end). When ``M_f_k`` is given, the reservoir-mass recursion
    ``Mf_{i} = Mf_{i-1} - mdot_f_i * tau_s`` is tracked as well.
    """
    N = cfg.N_p
    n_x, n_u, n_w = model.n_x, model.n_u, model.n_d
    K = np.asarray(K, dtype=float).reshape(n_u, n_x)
    x_k = np.asarray(x_k, dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    d_preview = np.asarray(d_preview, dtype=float).reshape(N, n_w)
    n_z = N * n_u

    Phi = model.A + model.B_u @ K
    powers = [np.eye(n_x)]
    for _ in range(N):
        powers.append(Phi @ powers[-1])

    feed = model.B_u @ (model.u_e - K @ model.x_e) + model.e_aff

    Sc = np.zeros((N, n_x, n_z))
    Ss = np.zeros((N, n_x))
    Sw = np.zeros((N, N, n_x, n_w))
    Uc = np.zeros((N, n_u, n_z))
    Us = np.zeros((N, n_u))
    Uw = np.zeros((N, N, n_u, n_w))

    s_const = x_k
    for i in range(1, N + 1):
        # input acting on s_{i-1}
        Uc[i - 1, :, (i - 1) * n_u : i * n_u] = np.eye(n_u)
        if i >= 2:
            Uc[i - 1] += K @ Sc[i - 2]
            Uw[i - 1, : i - 1] = np.einsum("ux,jxw->juw", K, Sw[i - 2, : i - 1])
        Us[i - 1] = K @ (s_const - model.x_e) + model.u_e

        # state after applying it
        prev_Sc = Sc[i - 2] if i >= 2 else np.zeros((n_x, n_z))
        Sc[i - 1] = Phi @ prev_Sc
        Sc[i - 1, :, (i - 1) * n_u : i * n_u] += model.B_u
        if i >= 2:
            Sw[i - 1, : i - 1] = np.einsum("xy,jyw->jxw", Phi, Sw[i - 2, : i - 1])
        Sw[i - 1, i - 1] = model.B_d
        s_const = Phi @ s_const + feed + model.B_d @ d_preview[i - 1]
        Ss[i - 1] = s_const

    Fc = Fs = Fw = None
    if M_f_k is not None:
        tau = model.tau_s
        Fc = -tau * np.cumsum(Uc[:, 0, :], axis=0)
        Fs = M_f_k - tau * np.cumsum(Us[:, 0], axis=0)
        Fw = -tau * np.cumsum(Uw[:, :, 0, :], axis=0)

    return PredictionMaps(
        Sc=Sc, Ss=Ss, Sw=Sw, Uc=Uc, Us=Us, Uw=Uw,
        u_prev=u_prev, tau_s=model.tau_s, Fc=Fc, Fs=Fs, Fw=Fw,
    )


def _row_blocks(maps: PredictionMaps, cfg: RmpcConfig):
    """Raw constraint rows in the form  a'z + a0 + sum_j v_j'w_j <= rhs.

    Returns ``(Az, a0, V, rhs)`` with ``V`` of shape ``(m, N_p, n_w)``. Rows
    with an infinite bound are omitted. The row order is fixed: state upper,
    state lower, input upper, input lower, rate upper, rate lower, then the
    reservoir-mass rows, each ordered by horizon step and component.
    """
    N, n_z, n_w = maps.N_p, maps.n_z, maps.n_w
    Az_parts, a0_parts, V_parts, rhs_parts = [], [], [], []

    def emit(coeffs, consts, wmaps, bounds, sign):
        # coeffs: (N, q, n_z); consts: (N, q); wmaps: (N, N, q, n_w); bounds: (q,)
        q = consts.shape[1]
        for c in range(q):
            b = bounds[c]
            if not np.isfinite(b):
                continue
            Az_parts.append(sign * coeffs[:, c, :])
            a0_parts.append(sign * consts[:, c])
            V_parts.append(sign * wmaps[:, :, c, :])
            rhs_parts.append(np.full(N, sign * b))

    emit(maps.Sc, maps.Ss, maps.Sw, cfg.X_box.upper, +1.0)
    emit(maps.Sc, maps.Ss, maps.Sw, cfg.X_box.lower, -1.0)
    emit(maps.Uc, maps.Us, maps.Uw, cfg.U_box.upper, +1.0)
    emit(maps.Uc, maps.Us, maps.Uw, cfg.U_box.lower, -1.0)

    # input rate: u_i - u_{i-1} with u_0 the previously applied input
    Dc = maps.Uc.copy()
    Dc[1:] -= maps.Uc[:-1]
    Ds = maps.Us.copy()
    Ds[0] -= maps.u_prev
    Ds[1:] -= maps.Us[:-1]
    Dw = maps.Uw.copy()
    Dw[1:] -= maps.Uw[:-1]
    emit(Dc, Ds, Dw, cfg.du_max, +1.0)
    emit(Dc, Ds, Dw, -cfg.du_max, -1.0)

    if maps.Fc is not None:
        Fc = maps.Fc[:, None, :]
        Fs = maps.Fs[:, None]
        Fw = maps.Fw[:, :, None, :]
        emit(Fc, Fs, Fw, cfg.Mf_box.upper, +1.0)
        emit(Fc, Fs, Fw, cfg.Mf_box.lower, -1.0)

    if not Az_parts:
        return (
            np.empty((0, n_z)),
            np.empty(0),
            np.empty((0, N, n_w)),
            np.empty(0),
        )
    return (
        np.concatenate(Az_parts),
        np.concatenate(a0_parts),
        np.concatenate(V_parts),
        np.concatenate(rhs_parts),
    )


def tighten_constraints(maps: PredictionMaps, cfg: RmpcConfig) -> QuadraticProgram:
    """Assemble the robustly tightened QP over the feedforward vector.

    Every constraint row is shrunk by the support function of its
    disturbance coefficients over the box: a center shift plus an L1 term in
    the half-widths. The Hessian is block-diagonal in the per-step effort
    weight, and the objective carries no disturbance dependence, so this QP
    is the exact reduction of the min-max problem.
    """
    Az, a0, V, rhs = _row_blocks(maps, cfg)
    w_c = cfg.W_box.center
    w_h = cfg.W_box.halfwidth
    margin = V @ w_c + np.abs(V) @ w_h  # (m, N_p)
    b = rhs - a0 - margin.sum(axis=1)

    N, n_u = maps.N_p, maps.n_u
    H = np.zeros((maps.n_z, maps.n_z))
    R2 = 2.0 * cfg.R_eff
    for i in range(N):
        H[i * n_u : (i + 1) * n_u, i * n_u : (i + 1) * n_u] = R2
    g = np.zeros(maps.n_z)
    return QuadraticProgram(H=H, g=g, A_in=Az, b_in=b)


def worst_case_oracle(maps: PredictionMaps, cfg: RmpcConfig, C: np.ndarray) -> np.ndarray:
    """Brute-force worst-case residual of every raw constraint row at ``C``.

    Enumerates all joint vertex assignments of the disturbance box over the
    horizon and returns, per row, the maximum of
    ``a'z + a0 + sum_j v_j'w_j - rhs``. Test-only utility; guarded to
    ``N_p * n_w <= 18`` dimensions of enumeration.
    """
    N, n_w = maps.N_p, maps.n_w
    dim = N * n_w
    if dim > 18:
        raise TooLarge(f"vertex enumeration over {dim} > 18 box dimensions")
    Az, a0, V, rhs = _row_blocks(maps, cfg)
    z = np.asarray(C, dtype=float).reshape(maps.n_z)
    m = Az.shape[0]
    if m == 0:
        return np.empty(0)

    lo = np.tile(cfg.W_box.lower, N)
    hi = np.tile(cfg.W_box.upper, N)
    Vflat = V.reshape(m, dim)
    worst = np.full(m, -np.inf)
    total = 1 << dim
    shifts = np.arange(dim)
    chunk = 1 << min(dim, 12)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        bits = (idx[:, None] >> shifts) & 1
        verts = np.where(bits, hi, lo)  # (c, dim)
        worst = np.maximum(worst, (Vflat @ verts.T).max(axis=1))
    return Az @ z + a0 + worst - rhs


def _feasible_start(qp: QuadraticProgram, warm: np.ndarray | None, feas_tol: float):
    """Cheap feasible-start candidates so most solves skip the phase-1 LP.

    Tries the shifted previous plan, the zero plan (which is also the
    unconstrained optimum), and a least-squares repair of the warm start
    toward its violated rows. Returns None when none qualifies.
    """
    A, b, n = qp.A_in, qp.b_in, qp.n

    def violation(z):
        return float(np.max(A @ z - b, initial=0.0))

    cands = []
    if warm is not None and warm.size == n:
        cands.append(np.asarray(warm, dtype=float))
    cands.append(np.zeros(n))
    for z in cands:
        if violation(z) <= feas_tol:
            return z
    if warm is not None and warm.size == n:
        z = np.asarray(warm, dtype=float).copy()
        for _ in range(3):
            resid = A @ z - b
            bad = resid > 0
            if not np.any(bad):
                return z
            # minimum-norm correction putting violated rows on their bounds
            corr = np.linalg.lstsq(A[bad], resid[bad], rcond=None)[0]
            z = z - corr
        if violation(z) <= feas_tol:
            return z
    return None


def solve_rmpc(
    model: AffineModel,
    K: np.ndarray,
    x_k: np.ndarray,
    M_f_k: float | None,
    u_prev: np.ndarray,
    d_preview: np.ndarray,
    cfg: RmpcConfig,
    warm_start: np.ndarray | None = None,
) -> RmpcSolution:
    """One robust MPC solve: prediction, tightening, QP, verdict.

    Feasible iff the QP reports an optimum; an exhausted iteration budget is
    treated as infeasible, conservatively. The first feedforward move is the
    one the outer algorithm stores and applies.
    """
    maps = build_prediction(model, K, x_k, u_prev, d_preview, cfg, M_f_k=M_f_k)
    qp = tighten_constraints(maps, cfg)
    z0 = _feasible_start(qp, warm_start, cfg.feas_tol)
    sol = solve_qp(qp, feas_tol=cfg.feas_tol, max_iter=cfg.max_iter, z0=z0)
    if sol.status is not QpStatus.OPTIMAL:
        return RmpcSolution(False, None, None, float("inf"), sol)
    C = sol.z.reshape(cfg.N_p, maps.n_u)
    return RmpcSolution(True, C, C[0].copy(), sol.objective, sol)
