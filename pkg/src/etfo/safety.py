"""Decentralized velocity-level collision filter.

Each robot clips its commanded planar velocity against one half-plane per
sensed neighbor: with h_ij = |p_i - p_j|^2 - delta^2, robot i enforces
(p_i - p_j)^T v >= -(kappa / 4) h_ij, i.e. it resolves half of the pairwise
barrier condition so that two filtered robots jointly satisfy
d/dt h_ij >= -kappa h_ij. The filtered velocity is found by cyclically
projecting onto the violated half-planes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROJECTION_SWEEPS = 50
PROJECTION_TOL = 1e-8
_DEGENERATE_DIST2 = 1e-18


@dataclass(frozen=True)
class SafetyConfig:
    enabled: bool = False
    delta: float = 0.2
    kappa: float = 2.0
    sensing_radius: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("safety distance must be positive")
        if self.kappa <= 0:
            raise ValueError("barrier gain must be positive")
        if not self.delta < self.sensing_radius:
            raise ValueError("safety distance must be below the sensing radius")

    def to_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "delta": self.delta,
            "kappa": self.kappa,
            "sensing_radius": self.sensing_radius,
        }

    @staticmethod
    def from_dict(doc: dict) -> "SafetyConfig":
        return SafetyConfig(
            enabled=bool(doc.get("enabled", False)),
            delta=float(doc.get("delta", 0.2)),
            kappa=float(doc.get("kappa", 2.0)),
            sensing_radius=float(doc.get("sensing_radius", 1.0)),
        )


def filter_velocity(cfg: SafetyConfig, i: int, p_all, v_des) -> tuple:
    """Closest velocity to v_des satisfying every active barrier half-plane.

    Returns (v_safe, infeasible_flag). Solved by cyclic projection onto the
    violated half-planes; if the constraint set is infeasible (robots
    already overlapping), returns the minimum-norm velocity that satisfies
    the nearest robot's constraint and flags the step.
    """
    if not cfg.enabled:
        return (float(v_des[0]), float(v_des[1])), False
    px = float(p_all[i][0])
    py = float(p_all[i][1])
    ax = []
    ay = []
    bs = []
    nearest = -1
    nearest_d2 = math.inf
    sense2 = cfg.sensing_radius * cfg.sensing_radius
    for j in range(len(p_all)):
        if j == i:
            continue
        dx = px - float(p_all[j][0])
        dy = py - float(p_all[j][1])
        d2 = dx * dx + dy * dy
        if d2 > sense2 or d2 < _DEGENERATE_DIST2:
            continue
        ax.append(dx)
        ay.append(dy)
        bs.append(-(cfg.kappa / 4.0) * (d2 - cfg.delta * cfg.delta))
        if d2 < nearest_d2:
            nearest_d2 = d2
            nearest = len(bs) - 1
    vx = float(v_des[0])
    vy = float(v_des[1])
    if not bs:
        return (vx, vy), False
    feasible = False
    for _ in range(PROJECTION_SWEEPS):
        worst = 0.0
        for k in range(len(bs)):
            viol = bs[k] - (ax[k] * vx + ay[k] * vy)
            if viol > PROJECTION_TOL:
                scale = viol / (ax[k] * ax[k] + ay[k] * ay[k])
                vx += ax[k] * scale
                vy += ay[k] * scale
            if viol > worst:
                worst = viol
        if worst <= PROJECTION_TOL:
            feasible = True
            break
    if not feasible:
        # overlapping robots: move straight away from the nearest one
        k = nearest
        scale = bs[k] / (ax[k] * ax[k] + ay[k] * ay[k])
        return (ax[k] * scale, ay[k] * scale), True
    return (vx, vy), False


def min_pairwise_distance(positions) -> float:
    """Smallest inter-robot distance in a position snapshot."""
    n = len(positions)
    best = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            dx = float(positions[i][0]) - float(positions[j][0])
            dy = float(positions[i][1]) - float(positions[j][1])
            d = math.sqrt(dx * dx + dy * dy)
            if d < best:
                best = d
    return best


def apply_to_derivative(cfg: SafetyConfig, i: int, p_all, dx: np.ndarray) -> tuple:
    """Filter the position rows of a plant derivative in place; returns (dx, flagged)."""
    (vx, vy), flagged = filter_velocity(cfg, i, p_all, (dx[0], dx[1]))
    dx[0] = vx
    dx[1] = vy
    return dx, flagged
