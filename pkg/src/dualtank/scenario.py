"""Scenario files: mission definition, bounds, boxes, solver settings, profile.

A scenario is one JSON document. Optional sections fall back to package
defaults, and every applied default is echoed through the module logger so a
run log shows the full effective configuration. Validation errors name the
offending field and the constraint it broke.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boxes import BoxSet
from .errors import ScenarioError
from .olccd import OlccdOptions
from .patternsearch import SearchOptions
from .plant import CP_WATER
from .profiles import DisturbanceProfile, load_profile
from .rccd import DesignVector, LqrConfig
from .rmpc import RmpcConfig

log = logging.getLogger(__name__)

#: design-vector component order (matches DesignVector.to_array)
DESIGN_KEYS = (
    "C_c", "C_h", "T_f", "R_s",
    "M_f0", "M_r0", "T_h0", "T_c0", "T_r0",
    "mdot_f0", "mdot_r0",
)

_DEFAULT_BOXES = {
    "X": {"lower": [0.05, 45.0, None, None], "upper": [None, 50.0, None, None]},
    "U": {"lower": [0.0, 0.0], "upper": [0.2, 0.3]},
    "W": {"lower": [-1.0, -1.0, -0.01], "upper": [1.0, 1.0, 0.01]},
    "Mf": {"lower": 0.0, "upper": None},
    "du_max": [np.inf, np.inf],
}


@dataclass(frozen=True)
class Scenario:
    name: str
    path: Path | None
    t_f: float
    tau_s: float
    n_t: int
    c_p: float
    seed: int
    n_sub: int
    design_bounds: BoxSet
    initial_design: DesignVector
    rmpc: RmpcConfig
    lqr: LqrConfig
    search: SearchOptions
    olccd: OlccdOptions
    profile: DisturbanceProfile


def _fail(field: str, constraint: str):
    raise ScenarioError(f"scenario field {field!r}: {constraint}")


def _bound_value(v, side: str) -> float:
    if v is None:
        return -np.inf if side == "lo" else np.inf
    return float(v)


def _parse_box(obj, field: str, dim: int) -> BoxSet:
    try:
        lo = np.atleast_1d(np.asarray([_bound_value(x, "lo") for x in np.atleast_1d(obj["lower"])]))
        hi = np.atleast_1d(np.asarray([_bound_value(x, "hi") for x in np.atleast_1d(obj["upper"])]))
    except (KeyError, TypeError, ValueError) as exc:
        _fail(field, f"must provide numeric 'lower' and 'upper' arrays ({exc})")
    if lo.size != dim or hi.size != dim:
        _fail(field, f"must have dimension {dim}")
    if np.any(lo > hi):
        _fail(field, "requires lower <= upper componentwise")
    return BoxSet(lo, hi)


def load_scenario(path) -> Scenario:
    """Parse, validate, and default a scenario JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}")
    return parse_scenario(raw, base_dir=path.parent, name=path.stem)


def parse_scenario(raw: dict, base_dir: Path | None = None, name: str = "scenario") -> Scenario:
    mission = raw.get("mission", {})
    t_f = float(mission.get("t_f", 0.0))
    tau_s = float(mission.get("tau_s", 1.0))
    if t_f <= 0:
        _fail("mission.t_f", "must be positive")
    if tau_s <= 0:
        _fail("mission.tau_s", "must be positive")
    n_steps = t_f / tau_s
    if abs(n_steps - round(n_steps)) > 1e-9:
        _fail("mission", f"t_f/tau_s = {n_steps:g} is not an integer step count")
    n_t = int(round(n_steps))

    c_p = float(raw.get("fluid", {}).get("c_p", CP_WATER))
    if "fluid" not in raw:
        log.info("scenario %s: fluid.c_p defaulted to %.3f kJ/(kg K)", name, c_p)
    seed = int(raw.get("seed", 0))
    n_sub = int(raw.get("integration", {}).get("n_sub", 10))
    if n_sub < 1:
        _fail("integration.n_sub", "must be >= 1")

    # design bounds
    db = raw.get("design_bounds")
    if db is None:
        _fail("design_bounds", "section is required")
    lo, hi = [], []
    for key in DESIGN_KEYS:
        if key not in db:
            _fail(f"design_bounds.{key}", "missing bound pair")
        pair = db[key]
        if len(pair) != 2 or not (float(pair[0]) <= float(pair[1])):
            _fail(f"design_bounds.{key}", "must be [lower, upper] with lower <= upper")
        lo.append(float(pair[0]))
        hi.append(float(pair[1]))
    design_bounds = BoxSet(np.array(lo), np.array(hi))

    # initial design
    init = raw.get("initial_design")
    if init is None:
        arr = design_bounds.center
        log.info("scenario %s: initial_design defaulted to bound midpoints", name)
    else:
        try:
            arr = np.array([float(init[k]) for k in DESIGN_KEYS])
        except KeyError as exc:
            _fail(f"initial_design.{exc.args[0]}", "missing value")
    if not design_bounds.contains(arr, tol=1e-12):
        _fail("initial_design", "lies outside design_bounds")
    initial_design = DesignVector.from_array(arr, c_p)

    # boxes
    boxes = dict(_DEFAULT_BOXES)
    user_boxes = raw.get("boxes", {})
    for key in ("X", "U", "W", "Mf", "du_max"):
        if key in user_boxes:
            boxes[key] = user_boxes[key]
        else:
            log.info("scenario %s: boxes.%s defaulted to %s", name, key, boxes[key])
    X_box = _parse_box(boxes["X"], "boxes.X", 4)
    U_box = _parse_box(boxes["U"], "boxes.U", 2)
    W_box = _parse_box(boxes["W"], "boxes.W", 3)
    mf = boxes["Mf"]
    Mf_box = BoxSet(
        np.array([_bound_value(mf.get("lower"), "lo")]),
        np.array([_bound_value(mf.get("upper"), "hi")]),
    )
    du_max = np.array([_bound_value(v, "hi") for v in boxes["du_max"]])
    if du_max.size != 2 or np.any(du_max <= 0):
        _fail("boxes.du_max", "must be two positive entries")

    rm = raw.get("rmpc", {})
    for key in ("N_p", "feas_tol", "max_iter"):
        if key not in rm:
            log.info("scenario %s: rmpc.%s defaulted", name, key)
    R_eff = np.asarray(rm.get("R_eff", np.eye(2).tolist()), dtype=float)
    try:
        rmpc_cfg = RmpcConfig(
            N_p=int(rm.get("N_p", 10)),
            R_eff=R_eff,
            X_box=X_box,
            U_box=U_box,
            du_max=du_max,
            W_box=W_box,
            Mf_box=Mf_box,
            feas_tol=float(rm.get("feas_tol", 1e-6)),
            max_iter=int(rm.get("max_iter", 500)),
        )
    except ValueError as exc:
        _fail("rmpc", str(exc))

    lq = raw.get("lqr", {})
    Q_diag = np.asarray(lq.get("Q", [1.0, 10.0, 10.0, 10.0]), dtype=float)
    R_diag = np.asarray(lq.get("R", [1.0, 1.0]), dtype=float)
    if Q_diag.size != 4 or np.any(Q_diag < 0):
        _fail("lqr.Q", "must be 4 nonnegative diagonal entries")
    if R_diag.size != 2 or np.any(R_diag <= 0):
        _fail("lqr.R", "must be 2 positive diagonal entries")
    lqr_cfg = LqrConfig(Q=np.diag(Q_diag), R=np.diag(R_diag))

    sr = raw.get("rccd_search", {})
    search = SearchOptions(
        mesh0=float(sr.get("mesh0", 0.25)),
        mesh_max=float(sr.get("mesh_max", 0.5)),
        mesh_tol=float(sr.get("mesh_tol", 1e-3)),
        obj_tol=float(sr.get("obj_tol", 1e-4)),
        budget=int(sr.get("budget", 5000)),
    )

    ol = raw.get("olccd", {})
    olccd_opt = OlccdOptions(
        viol_tol=float(ol.get("viol_tol", 1e-4)),
        max_outer=int(ol.get("max_outer", 12)),
        penalty0=float(ol.get("penalty0", 10.0)),
        penalty_growth=float(ol.get("penalty_growth", 10.0)),
        penalty_cap=float(ol.get("penalty_cap", 1e8)),
        inner_maxiter=int(ol.get("inner_maxiter", 400)),
    )

    # profile
    prof = raw.get("profile")
    if prof is None:
        _fail("profile", "section is required (inline samples or csv path)")
    if "inline" in prof:
        samples = np.asarray(prof["inline"], dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 3:
            _fail("profile.inline", "must be a list of [Qdot_h, T_s, mdot_e] rows")
        profile = DisturbanceProfile(samples, tau_s)
    elif "csv" in prof:
        csv_path = Path(prof["csv"])
        if base_dir is not None and not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        if not csv_path.exists():
            _fail("profile.csv", f"referenced file does not exist: {csv_path}")
        profile = load_profile(csv_path, tau_s)
    else:
        _fail("profile", "must contain 'inline' samples or a 'csv' path")
    if profile.n_t != n_t:
        _fail("profile", f"has {profile.n_t} samples but mission needs n_t = {n_t}")
    if np.any(profile.samples[:, 2] < 0):
        _fail("profile", "exiting flow mdot_e must be nonnegative")

    return Scenario(
        name=str(raw.get("name", name)),
        path=None if base_dir is None else base_dir,
        t_f=t_f,
        tau_s=tau_s,
        n_t=n_t,
        c_p=c_p,
        seed=seed,
        n_sub=n_sub,
        design_bounds=design_bounds,
        initial_design=initial_design,
        rmpc=rmpc_cfg,
        lqr=lqr_cfg,
        search=search,
        olccd=olccd_opt,
        profile=profile,
    )


def olccd_bounds(scenario: Scenario) -> BoxSet:
    """Bounds over the open-loop transcription vector [p, x0, U]."""
    db = scenario.design_bounds
    n_t = scenario.n_t
    lo = np.concatenate([db.lower[:9], np.tile(scenario.rmpc.U_box.lower, n_t)])
    hi = np.concatenate([db.upper[:9], np.tile(scenario.rmpc.U_box.upper, n_t)])
    return BoxSet(lo, hi)


def olccd_initial(scenario: Scenario) -> np.ndarray:
    """Initial transcription vector: design guess plus its u0 held constant."""
    arr = scenario.initial_design.to_array()
    u0 = np.tile(arr[9:11], scenario.n_t)
    return np.concatenate([arr[:9], u0])
