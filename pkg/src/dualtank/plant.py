"""Dual-tank thermal management plant: dynamics, Jacobians, and integration.

The plant circulates a working fluid between two tanks. Cold fluid leaves a
reservoir tank (mass ``M_f``, fixed temperature ``T_f``) at flow ``mdot_f``,
warm fluid leaves a recirculation tank (mass ``M_r``, temperature ``T_r``) at
flow ``mdot_r``. The streams mix, absorb a heat load ``Qdot_h`` in a heater of
capacitance ``C_h`` (lumped temperature ``T_h``), lose an exiting flow
``mdot_e`` downstream of the heater, reject heat through a cooler of
capacitance ``C_c`` (temperature ``T_c``) to a sink at ``T_s`` through thermal
resistance ``R_s``, and return to the recirculation tank.

State, input, and disturbance vectors follow a fixed component order:

    x = [M_f, M_r, T_h, T_c, T_r]        (kg, kg, degC, degC, degC)
    u = [mdot_f, mdot_r]                 (kg/s)
    d = [Qdot_h, T_s, mdot_e]            (kW, degC, kg/s)

All functions broadcast over leading axes, so a batch of states of shape
``(n, 5)`` integrates in one call. Energy balances are evaluated in enthalpy
form, ``mdot_m * T_m == mdot_f * T_f + mdot_r * T_r``, which stays defined as
the total flow goes to zero; the mixing temperature itself is only formed by
:func:`mix`, which rejects degenerate flows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFlow, SingularMass

# state components
M_F, M_R, T_H, T_C, T_R = range(5)
# input components
MDOT_F, MDOT_R = range(2)
# disturbance components
QDOT_H, T_S, MDOT_E = range(3)

STATE_NAMES = ("M_f", "M_r", "T_h", "T_c", "T_r")
INPUT_NAMES = ("mdot_f", "mdot_r")
DISTURBANCE_NAMES = ("Qdot_h", "T_s", "mdot_e")

#: minimum total flow for which a mixing temperature is defined (kg/s)
EPS_FLOW = 1e-6
#: minimum recirculation tank mass keeping dT_r/dt nonsingular (kg)
EPS_MASS = 1e-3

#: specific heat of water, kJ/(kg K)
CP_WATER = 4.186


@dataclass(frozen=True)
class PlantParams:
    """Co-designed plant parameters plus the working-fluid constant.

    Attributes
    ----------
    C_c : float
        Cooler thermal capacitance, kJ/K.
    C_h : float
        Heater thermal capacitance, kJ/K.
    T_f : float
        Reservoir-tank fluid temperature, degC.
    R_s : float
        Sink thermal resistance, K/kW.
    c_p : float
        Working-fluid specific heat, kJ/(kg K). Water by default.
    """

    C_c: float
    C_h: float
    T_f: float
    R_s: float
    c_p: float = CP_WATER

    def __post_init__(self):
        for name in ("C_c", "C_h", "T_f", "R_s", "c_p"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"PlantParams.{name} must be strictly positive")

    def core(self) -> np.ndarray:
        """The four design variables as an array [C_c, C_h, T_f, R_s]."""
        return np.array([self.C_c, self.C_h, self.T_f, self.R_s])


def mix(u, T_r, T_f):
    """Mix the two tank streams into one flow.

    Returns ``(mdot_m, T_m)`` with ``mdot_m = mdot_f + mdot_r`` and ``T_m``
    the flow-weighted mean temperature. Raises :class:`DegenerateFlow` when
    the total flow is below ``EPS_FLOW``, since ``T_m`` is then undefined;
    admissible input sets keep flows well above the guard, so tripping it
    indicates a modeling error rather than a tight operating point.
    """
    u = np.asarray(u, dtype=float)
    mdot_m = u[..., MDOT_F] + u[..., MDOT_R]
    if np.any(mdot_m < EPS_FLOW):
        raise DegenerateFlow(f"total flow {np.min(mdot_m):g} kg/s below {EPS_FLOW:g}")
    T_m = (u[..., MDOT_F] * T_f + u[..., MDOT_R] * np.asarray(T_r)) / mdot_m
    return mdot_m, T_m


def state_derivative(x, u, d, p: PlantParams):
    """Time derivative of the five plant states.

    Mass balances are linear in the flows; the three temperature equations
    carry the heater load, cooler rejection, and recirculation-tank return
    stream. The heater and cooler balances use the enthalpy form of the
    mixing product, so zero-flow states are evaluable (see module docstring);
    a mixing temperature demanded elsewhere still goes through :func:`mix`
    and its degenerate-flow guard.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    return _guarded_rates(x, u, d, p)


def _guarded_rates(x, u, d, p: PlantParams):
    M_r = x[..., M_R]
    if x.ndim == 1:
        if M_r < EPS_MASS:
            raise SingularMass(f"M_r {M_r:g} kg below guard {EPS_MASS:g}")
    elif np.any(M_r < EPS_MASS):
        raise SingularMass(f"M_r {np.min(M_r):g} kg below guard {EPS_MASS:g}")
    return _rates(x, u, d, p, M_r)


def _rates(x, u, d, p: PlantParams, M_r):
    """Unguarded RHS; callers supply the (possibly floored) divisor mass."""
    mf = u[..., MDOT_F]
    mr = u[..., MDOT_R]
    mm = mf + mr
    T_h = x[..., T_H]
    T_c = x[..., T_C]
    T_r = x[..., T_R]
    Qh = d[..., QDOT_H]
    Ts = d[..., T_S]
    me = d[..., MDOT_E]

    dx = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (5,), d.shape[:-1] + (5,)))
    dx[..., M_F] = -mf
    dx[..., M_R] = mf - me
    # mm*cp*(T_m - T_h) expanded with mm*T_m = mf*T_f + mr*T_r
    dx[..., T_H] = (p.c_p * (mf * (p.T_f - T_h) + mr * (T_r - T_h)) + Qh) / p.C_h
    dx[..., T_C] = ((mm - me) * p.c_p * (T_h - T_c) + (Ts - T_c) / p.R_s) / p.C_c
    dx[..., T_R] = (mm - me) * (T_c - T_r) / M_r
    return dx


def jacobians(x, u, d, p: PlantParams):
    """Analytic partial derivatives of the dynamics at one point.

    Returns ``(A_c, Bu_c, Bd_c, f0)`` where ``A_c`` is d f/d x (5x5),
    ``Bu_c`` is d f/d u (5x2), ``Bd_c`` is d f/d d (5x3), and ``f0`` is the
    drift ``state_derivative(x, u, d, p)``. Scalar point only (no batching).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    f0 = state_derivative(x, u, d, p)

    mf, mr = u
    mm = mf + mr
    T_h, T_c, T_r = x[T_H], x[T_C], x[T_R]
    me = d[MDOT_E]
    M_r = x[M_R]
    cp = p.c_p

    A = np.zeros((5, 5))
    Bu = np.zeros((5, 2))
    Bd = np.zeros((5, 3))

    # mass balances: linear, state-independent
    Bu[M_F, MDOT_F] = -1.0
    Bu[M_R, MDOT_F] = 1.0
    Bd[M_R, MDOT_E] = -1.0

    # heater: dT_h/dt = (cp*(mf*(T_f - T_h) + mr*(T_r - T_h)) + Qh)/C_h
    A[T_H, T_H] = -cp * mm / p.C_h
    A[T_H, T_R] = cp * mr / p.C_h
    Bu[T_H, MDOT_F] = cp * (p.T_f - T_h) / p.C_h
    Bu[T_H, MDOT_R] = cp * (T_r - T_h) / p.C_h
    Bd[T_H, QDOT_H] = 1.0 / p.C_h

    # cooler: dT_c/dt = ((mm - me)*cp*(T_h - T_c) + (Ts - T_c)/R_s)/C_c
    A[T_C, T_H] = (mm - me) * cp / p.C_c
    A[T_C, T_C] = (-(mm - me) * cp - 1.0 / p.R_s) / p.C_c
    Bu[T_C, MDOT_F] = cp * (T_h - T_c) / p.C_c
    Bu[T_C, MDOT_R] = cp * (T_h - T_c) / p.C_c
    Bd[T_C, T_S] = 1.0 / (p.R_s * p.C_c)
    Bd[T_C, MDOT_E] = -cp * (T_h - T_c) / p.C_c

    # recirculation tank: dT_r/dt = (mm - me)*(T_c - T_r)/M_r
    A[T_R, M_R] = -(mm - me) * (T_c - T_r) / M_r**2
    A[T_R, T_C] = (mm - me) / M_r
    A[T_R, T_R] = -(mm - me) / M_r
    Bu[T_R, MDOT_F] = (T_c - T_r) / M_r
    Bu[T_R, MDOT_R] = (T_c - T_r) / M_r
    Bd[T_R, MDOT_E] = -(T_c - T_r) / M_r

    return A, Bu, Bd, f0


def rk4_step(x, u, d, p: PlantParams, h: float):
    """One classical Runge-Kutta step with inputs and disturbances held constant."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    k1 = _guarded_rates(x, u, d, p)
    k2 = _guarded_rates(x + 0.5 * h * k1, u, d, p)
    k3 = _guarded_rates(x + 0.5 * h * k2, u, d, p)
    k4 = _guarded_rates(x + h * k3, u, d, p)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_interval(x, u, d, p: PlantParams, tau_s: float, n_sub: int = 10):
    """Advance the plant one control sample of length ``tau_s``.

    The inputs and disturbances are zero-order held; the interval is split
    into ``n_sub`` equal RK4 substeps.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    h = tau_s / n_sub
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    for _ in range(n_sub):
        k1 = _guarded_rates(x, u, d, p)
        k2 = _guarded_rates(x + 0.5 * h * k1, u, d, p)
        k3 = _guarded_rates(x + 0.5 * h * k2, u, d, p)
        k4 = _guarded_rates(x + h * k3, u, d, p)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x
