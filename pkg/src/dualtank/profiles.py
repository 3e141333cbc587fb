"""Nominal disturbance profiles and their bounded perturbations.

A profile holds one disturbance vector ``[Qdot_h, T_s, mdot_e]`` per control
sample. Sample ``k`` (1-based, matching the controller's step index) lives at
``samples[k - 1]``. Perturbed profiles model the true disturbance
``d_tilde_k = d_k + w_k`` with each ``w_k`` drawn from a bounding box.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .boxes import BoxSet

CSV_HEADER = "k,Qdot_h_kW,T_s_C,mdot_e_kgps"

#: accepted perturbation modes for :func:`perturb_profile`
PERTURB_MODES = ("none", "vertex_hi", "vertex_lo", "random")


@dataclass(frozen=True)
class DisturbanceProfile:
    """Ordered disturbance samples with their sample period.

    ``samples`` has shape ``(n_t, 3)``; ``tau_s`` is the control sample
    period in seconds.
    """

    samples: np.ndarray
    tau_s: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 3:
            raise ValueError(f"samples must have shape (n_t, 3), got {s.shape}")
        if not self.tau_s > 0:
            raise ValueError("tau_s must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def n_t(self) -> int:
        return self.samples.shape[0]

    def step(self, k: int) -> np.ndarray:
        """Disturbance at 1-based step index k."""
        if not 1 <= k <= self.n_t:
            raise IndexError(f"step {k} outside [1, {self.n_t}]")
        return self.samples[k - 1]

    def preview(self, k: int, horizon: int) -> np.ndarray:
        """Samples for steps k .. k+horizon-1, holding the last value past the end."""
        idx = np.minimum(np.arange(k - 1, k - 1 + horizon), self.n_t - 1)
        return self.samples[idx]


def perturb_profile(
    profile: DisturbanceProfile,
    w_box: BoxSet,
    mode: str = "none",
    seed: int | None = None,
) -> DisturbanceProfile:
    """Apply a bounded perturbation ``w_k`` from ``w_box`` to every sample.

    Modes: ``none`` returns the profile unchanged; ``vertex_hi`` and
    ``vertex_lo`` add the constant upper or lower corner of the box;
    ``random`` draws ``w_k`` uniformly from the box per step, reproducibly
    from ``seed``.
    """
    if w_box.dim != 3:
        raise ValueError("disturbance box must be 3-dimensional")
    if mode == "none":
        w = np.zeros_like(profile.samples)
    elif mode == "vertex_hi":
        w = np.broadcast_to(w_box.upper, profile.samples.shape)
    elif mode == "vertex_lo":
        w = np.broadcast_to(w_box.lower, profile.samples.shape)
    elif mode == "random":
        rng = np.random.default_rng(seed)
        w = w_box.sample(rng, n=profile.n_t)
    else:
        raise ValueError(f"unknown perturbation mode {mode!r}; use one of {PERTURB_MODES}")
    return DisturbanceProfile(profile.samples + w, profile.tau_s)


def _fmt(v: float) -> str:
    # repr gives the shortest string that round-trips the float exactly
    return repr(float(v))


def profile_to_csv(profile: DisturbanceProfile) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for k, row in enumerate(profile.samples, start=1):
        buf.write(f"{k},{_fmt(row[0])},{_fmt(row[1])},{_fmt(row[2])}\n")
    return buf.getvalue()


def profile_from_csv(text: str, tau_s: float) -> DisturbanceProfile:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError(f"expected header {CSV_HEADER!r}")
    rows = []
    for i, ln in enumerate(lines[1:], start=1):
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"row {i}: expected 4 fields, got {len(parts)}")
        k = int(parts[0])
        if k != i:
            raise ValueError(f"row {i}: step index {k} out of order")
        rows.append([float(parts[1]), float(parts[2]), float(parts[3])])
    return DisturbanceProfile(np.array(rows), tau_s)


def save_profile(path, profile: DisturbanceProfile) -> None:
    with open(path, "w") as fh:
        fh.write(profile_to_csv(profile))


def load_profile(path, tau_s: float) -> DisturbanceProfile:
    with open(path) as fh:
        return profile_from_csv(fh.read(), tau_s)
