"""Per-step control mathematics: discretization, reduction, and LQR gains.

Each controller step linearizes the plant about the current operating point,
converts the continuous affine model to discrete time with an exact
zero-order-hold map, deletes the reservoir-mass state (it is decoupled from
every retained rate and uncontrollable in this topology), and synthesizes a
discrete-time LQR gain for the 4-state reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import plant
from .errors import NotControllable, RiccatiDiverged
from .plant import PlantParams

try:  # numba shaves the Riccati iteration from milliseconds to microseconds
    import numba

    @numba.njit(cache=True)
    def _riccati_iterate(A, B, Q, R, P, tol, max_iter):  # pragma: no cover
        for it in range(max_iter):
            BtP = B.T @ P
            G = np.linalg.solve(R + BtP @ B, BtP @ A)
            P_next = Q + A.T @ P @ A - A.T @ P @ B @ G
            P_next = 0.5 * (P_next + P_next.T)
            if np.max(np.abs(P_next - P)) <= tol:
                return P_next, True
            P = P_next
        return P, False

except ImportError:  # pragma: no cover

    def _riccati_iterate(A, B, Q, R, P, tol, max_iter):
        for _ in range(max_iter):
            BtP = B.T @ P
            G = np.linalg.solve(R + BtP @ B, BtP @ A)
            P_next = Q + A.T @ P @ A - A.T @ P @ B @ G
            P_next = 0.5 * (P_next + P_next.T)
            if np.max(np.abs(P_next - P)) <= tol:
                return P_next, True
            P = P_next
        return P, False


@dataclass(frozen=True)
class AffineModel:
    """Discrete-time affine model x' = A x + B_u u + B_d d + e_aff.

    The model is the ZOH discretization of the plant linearized at
    ``(x_e, u_e, d_e)``; evaluating it at that point reproduces the
    discretized drift exactly.
    """

    A: np.ndarray
    B_u: np.ndarray
    B_d: np.ndarray
    e_aff: np.ndarray
    x_e: np.ndarray
    u_e: np.ndarray
    d_e: np.ndarray
    tau_s: float

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B_u.shape[1]

    @property
    def n_d(self) -> int:
        return self.B_d.shape[1]

    def step(self, x, u, d) -> np.ndarray:
        return self.A @ x + self.B_u @ u + self.B_d @ d + self.e_aff


def matrix_exponential(M: np.ndarray) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring with Pade approximants."""
    return scipy.linalg.expm(np.asarray(M, dtype=float))


def discretize_zoh(A_c: np.ndarray, B_c: np.ndarray, tau_s: float):
    """Exact zero-order-hold discretization of ``xdot = A_c x + B_c v``.

    ``B_c`` may stack any held columns (inputs, disturbances, a drift
    column). Returns ``(A, B)`` from the exponential of the block-augmented
    matrix ``[[A_c, B_c], [0, 0]] * tau_s``.
    """
    if tau_s <= 0:
        raise ValueError("tau_s must be positive")
    A_c = np.atleast_2d(np.asarray(A_c, dtype=float))
    B_c = np.atleast_2d(np.asarray(B_c, dtype=float))
    n, m = A_c.shape[0], B_c.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A_c
    aug[:n, n:] = B_c
    E = matrix_exponential(aug * tau_s)
    return E[:n, :n], E[:n, n:]


def linearize_discretize(x, u, d, p: PlantParams, tau_s: float) -> AffineModel:
    """Linearize the plant at ``(x, u, d)`` and discretize with period ``tau_s``.

    The affine offset column absorbs the drift at the linearization point, so
    the returned model is exact for the linearized dynamics, not just for
    deviations.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    A_c, Bu_c, Bd_c, f0 = plant.jacobians(x, u, d, p)
    r = f0 - A_c @ x - Bu_c @ u - Bd_c @ d
    B_all = np.column_stack([Bu_c, Bd_c, r])
    A, B = discretize_zoh(A_c, B_all, tau_s)
    n_u, n_d = Bu_c.shape[1], Bd_c.shape[1]
    return AffineModel(
        A=A,
        B_u=B[:, :n_u],
        B_d=B[:, n_u : n_u + n_d],
        e_aff=B[:, n_u + n_d],
        x_e=x,
        u_e=u,
        d_e=d,
        tau_s=tau_s,
    )


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def extract_controllable(model: AffineModel, drop_index: int = plant.M_F) -> AffineModel:
    """Delete one state row/column and verify the reduction is controllable.

    For this plant the reservoir mass ``M_f`` is the dropped state: no
    retained rate depends on it, so deletion is exact for the retained
    dynamics. Raises :class:`NotControllable` when the reduced pair fails the
    controllability rank test, which flags a degenerate linearization point.
    """
    keep = [i for i in range(model.n_x) if i != drop_index]
    A = model.A[np.ix_(keep, keep)]
    B_u = model.B_u[keep]
    B_d = model.B_d[keep]
    e_aff = model.e_aff[keep]
    rank = np.linalg.matrix_rank(controllability_matrix(A, B_u))
    if rank < A.shape[0]:
        raise NotControllable(
            f"reduced pair has controllability rank {rank} < {A.shape[0]}"
        )
    return AffineModel(
        A=A,
        B_u=B_u,
        B_d=B_d,
        e_aff=e_aff,
        x_e=model.x_e[keep],
        u_e=model.u_e,
        d_e=model.d_e,
        tau_s=model.tau_s,
    )


def dlqr(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    P0: np.ndarray | None = None,
):
    """Discrete-time LQR gain by fixed-point iteration on the Riccati equation.

    Iterates ``P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA`` until the update is
    below ``tol`` in max norm. Returns ``(K, P)`` with the sign convention
    ``u = K x`` stabilizing, i.e. ``K = -(R + B'PB)^-1 B'PA``. ``P0`` warm
    starts the iteration (the fixed point does not depend on it).

    Raises :class:`RiccatiDiverged` if the cap is hit, which in practice
    means the pair is uncontrollable or nearly so.
    """
    A = np.ascontiguousarray(np.atleast_2d(np.asarray(A, dtype=float)))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    B = np.ascontiguousarray(B)
    Q = np.ascontiguousarray(np.atleast_2d(np.asarray(Q, dtype=float)))
    R = np.ascontiguousarray(np.atleast_2d(np.asarray(R, dtype=float)))

    P = Q.copy() if P0 is None else np.atleast_2d(np.asarray(P0, dtype=float)).copy()
    P, converged = _riccati_iterate(A, B, Q, R, np.ascontiguousarray(P), tol, max_iter)
    if not converged:
        raise RiccatiDiverged(f"no convergence within {max_iter} iterations")

    BtP = B.T @ P
    K = -np.linalg.solve(R + BtP @ B, BtP @ A)
    return K, P


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))
