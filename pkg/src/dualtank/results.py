"""Design-result serialization: JSON documents and trajectory CSV files.

The trajectory CSV has one row per sample instant ``t = k * tau_s`` for
``k = 0 .. steps``: the state columns hold ``x(t)``, and the input,
disturbance, and ``h_k`` columns hold the values applied over ``[t, t+tau)``
(zero-order hold), with the final row repeating the last step's held values.
Floats are written with ``repr``, so loading a CSV and re-emitting it is
byte-identical.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .plant import PlantParams
from .rccd import RolloutResult, Schedules

TRAJECTORY_HEADER = "k,t,M_f,M_r,T_h,T_c,T_r,mdot_f,mdot_r,Qdot_h,T_s,mdot_e,h_k"


@dataclass(frozen=True)
class DesignResult:
    """Everything a replay needs: optimal design plus its control schedule.

    ``feedforward`` holds the scheduled increments ``c_k`` for a closed-loop
    design and the absolute moves ``u_k`` for an open-loop one; the gain and
    linearization schedules are ``None`` in the open-loop case, which is how
    the replay dispatcher distinguishes the two.
    """

    algorithm: str
    params: PlantParams
    x0: np.ndarray
    u0: np.ndarray
    J_sys: float
    feasible: bool
    tau_s: float
    n_t: int
    feedforward: np.ndarray
    gains: np.ndarray | None = None
    lin_x: np.ndarray | None = None
    lin_u: np.ndarray | None = None
    first_infeasible_k: int | None = None
    trajectory_csv: str | None = None

    def schedules(self) -> Schedules:
        if self.gains is None:
            raise ValueError("open-loop design result carries no gain schedule")
        return Schedules(
            C_star=self.feedforward,
            K_star=self.gains,
            lin_x=self.lin_x,
            lin_u=self.lin_u,
        )

    def to_dict(self) -> dict:
        d = {
            "algorithm": self.algorithm,
            "params": {
                "C_c": self.params.C_c,
                "C_h": self.params.C_h,
                "T_f": self.params.T_f,
                "R_s": self.params.R_s,
                "c_p": self.params.c_p,
            },
            "x0": self.x0.tolist(),
            "u0": self.u0.tolist(),
            "J_sys": self.J_sys,
            "feasible": self.feasible,
            "tau_s": self.tau_s,
            "n_t": self.n_t,
            "feedforward": self.feedforward.tolist(),
            "gains": None if self.gains is None else self.gains.tolist(),
            "lin_x": None if self.lin_x is None else self.lin_x.tolist(),
            "lin_u": None if self.lin_u is None else self.lin_u.tolist(),
            "first_infeasible_k": self.first_infeasible_k,
            "trajectory_csv": self.trajectory_csv,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DesignResult":
        def arr(v):
            return None if v is None else np.asarray(v, dtype=float)

        return cls(
            algorithm=d["algorithm"],
            params=PlantParams(**d["params"]),
            x0=np.asarray(d["x0"], dtype=float),
            u0=np.asarray(d["u0"], dtype=float),
            J_sys=float(d["J_sys"]),
            feasible=bool(d["feasible"]),
            tau_s=float(d["tau_s"]),
            n_t=int(d["n_t"]),
            feedforward=np.asarray(d["feedforward"], dtype=float).reshape(-1, 2),
            gains=arr(d.get("gains")),
            lin_x=arr(d.get("lin_x")),
            lin_u=arr(d.get("lin_u")),
            first_infeasible_k=d.get("first_infeasible_k"),
            trajectory_csv=d.get("trajectory_csv"),
        )


def save_design(path, result: DesignResult) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2)
        fh.write("\n")


def load_design(path) -> DesignResult:
    with open(path) as fh:
        return DesignResult.from_dict(json.load(fh))


def _fmt(v: float) -> str:
    return repr(float(v))


def trajectory_to_csv(rollout: RolloutResult, profile_samples: np.ndarray, tau_s: float) -> str:
    """Render a rollout (plus the disturbances it saw) as the trajectory CSV."""
    steps = rollout.steps
    X = rollout.trajectory
    U = rollout.applied_u
    D = np.asarray(profile_samples, dtype=float)
    h = rollout.h
    buf = io.StringIO()
    buf.write(TRAJECTORY_HEADER + "\n")
    for k in range(steps + 1):
        j = min(k, steps - 1) if steps > 0 else 0
        if steps == 0:
            u = np.zeros(2)
            d = np.zeros(3)
            hk = 0
        else:
            u = U[j]
            d = D[j]
            hk = int(h[j]) if j < h.size else 0
        row = [str(k), _fmt(k * tau_s)]
        row += [_fmt(v) for v in X[k]]
        row += [_fmt(u[0]), _fmt(u[1]), _fmt(d[0]), _fmt(d[1]), _fmt(d[2]), str(hk)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def save_trajectory(path, rollout: RolloutResult, profile_samples, tau_s: float) -> None:
    with open(path, "w") as fh:
        fh.write(trajectory_to_csv(rollout, profile_samples, tau_s))


def load_trajectory(path) -> dict:
    """Parse a trajectory CSV into named column arrays."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ValueError(f"expected header {TRAJECTORY_HEADER!r}")
    names = TRAJECTORY_HEADER.split(",")
    cols = {n: [] for n in names}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(names):
            raise ValueError(f"bad trajectory row: {ln!r}")
        for n, v in zip(names, parts):
            cols[n].append(float(v))
    return {n: np.asarray(v) for n, v in cols.items()}


def trajectory_dict_to_csv(cols: dict) -> str:
    """Inverse of :func:`load_trajectory`; used to prove lossless round-trips."""
    names = TRAJECTORY_HEADER.split(",")
    buf = io.StringIO()
    buf.write(TRAJECTORY_HEADER + "\n")
    n_rows = len(cols[names[0]])
    for i in range(n_rows):
        parts = []
        for n in names:
            v = cols[n][i]
            if n in ("k", "h_k"):
                parts.append(str(int(v)))
            else:
                parts.append(_fmt(v))
        buf.write(",".join(parts) + "\n")
    return buf.getvalue()
