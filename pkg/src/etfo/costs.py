"""Aggregative cost for target encirclement, spot monitoring, and danger avoidance.

Per-robot cost: gamma1 * |sigma|^2 + gamma2 * |p - s|^2 + gamma3 * sum_l G_l(p),
where sigma is the mean over robots of the unit bearing vector from the
target to each robot, s is the robot's assigned spot (if any) and G_l are
Gaussian danger bumps. Minimizing |sigma|^2 maximizes the team's circular
variance around the target, i.e. spreads bearings uniformly.

Besides the per-robot pieces and their gradients, this module provides the
centralized oracles over setpoint space (cost and exact gradient of the
steady-state-reduced objective) used by the stopping criterion and by the
finite-difference acceptance checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import plants

DEFAULT_RHO_MIN = 1e-3  # guard radius for the bearing singularity at the target


@dataclass(frozen=True)
class DangerGaussian:
    """One danger bump A * exp(-|p - mu|^2 / (2 s^2))."""

    mu: tuple
    s: float
    amp: float = 1.0

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("gaussian width must be positive")
        if self.amp <= 0:
            raise ValueError("gaussian amplitude must be positive")
        object.__setattr__(self, "mu", (float(self.mu[0]), float(self.mu[1])))

    def value(self, p) -> float:
        dx = p[0] - self.mu[0]
        dy = p[1] - self.mu[1]
        return self.amp * math.exp(-(dx * dx + dy * dy) / (2.0 * self.s * self.s))

    def grad(self, p) -> np.ndarray:
        dx = p[0] - self.mu[0]
        dy = p[1] - self.mu[1]
        s2 = self.s * self.s
        e = self.amp * math.exp(-(dx * dx + dy * dy) / (2.0 * s2))
        return np.array([-dx / s2 * e, -dy / s2 * e])


@dataclass(frozen=True, eq=False)
class Scenario:
    """Cost-side description of one mission.

    ``spots`` maps robot index to its assigned point of interest; robots
    without an entry get an effective spot weight of zero.
    """

    target: tuple = (0.0, 0.0)
    gamma1: float = 1.0
    gamma2: float = 0.0
    gamma3: float = 0.0
    spots: dict = field(default_factory=dict)
    danger: tuple = ()
    rho_min: float = DEFAULT_RHO_MIN

    def __post_init__(self):
        if min(self.gamma1, self.gamma2, self.gamma3) < 0:
            raise ValueError("cost weights must be nonnegative")
        if self.rho_min <= 0:
            raise ValueError("rho_min must be positive")
        object.__setattr__(self, "target", (float(self.target[0]), float(self.target[1])))
        object.__setattr__(
            self,
            "spots",
            {int(i): (float(s[0]), float(s[1])) for i, s in dict(self.spots).items()},
        )
        object.__setattr__(self, "danger", tuple(self.danger))

    def gamma2_for(self, i: int) -> float:
        return self.gamma2 if i in self.spots else 0.0


def phi(sc: Scenario, p) -> np.ndarray:
    """Unit bearing vector from the target toward p.

    Inside the guard radius the bearing is undefined; the frozen convention
    (1, 0) is returned there.
    """
    dx = p[0] - sc.target[0]
    dy = p[1] - sc.target[1]
    r = math.sqrt(dx * dx + dy * dy)
    if r < sc.rho_min:
        return np.array([1.0, 0.0])
    return np.array([dx / r, dy / r])


def grad_phi_transpose_apply(sc: Scenario, p, v) -> np.ndarray:
    """Apply the transpose bearing Jacobian at p to v (position-space result).

    (d phi / d p)^T v = ((-sin, cos) . v) * (-dy, dx) / rho^2 with rho^2
    clamped at rho_min^2 near the target (same frozen direction as phi).
    """
    dx = p[0] - sc.target[0]
    dy = p[1] - sc.target[1]
    r2 = dx * dx + dy * dy
    r = math.sqrt(r2)
    if r < sc.rho_min:
        c, s = 1.0, 0.0
    else:
        c = dx / r
        s = dy / r
    rho2 = r2 if r2 > sc.rho_min * sc.rho_min else sc.rho_min * sc.rho_min
    coef = (-s * v[0] + c * v[1]) / rho2
    return np.array([-dy * coef, dx * coef])


def grad1_cost_pos(sc: Scenario, i: int, p) -> np.ndarray:
    """Own-state gradient of robot i's cost, in position space."""
    g2 = sc.gamma2_for(i)
    gx = 0.0
    gy = 0.0
    if g2 > 0.0:
        s = sc.spots[i]
        gx += 2.0 * g2 * (p[0] - s[0])
        gy += 2.0 * g2 * (p[1] - s[1])
    if sc.gamma3 > 0.0:
        for gauss in sc.danger:
            gg = gauss.grad(p)
            gx += sc.gamma3 * gg[0]
            gy += sc.gamma3 * gg[1]
    return np.array([gx, gy])


def grad1_cost(sc: Scenario, i: int, x) -> np.ndarray:
    """Own-state gradient lifted to the robot's full state (zeros off-position).

    The cooperative term depends on the aggregate only, so it contributes
    nothing here.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[:2] = grad1_cost_pos(sc, i, x)
    return out


def grad2_cost(sc: Scenario, sigma_hat) -> np.ndarray:
    """Aggregate-argument gradient: 2 * gamma1 * sigma_hat (spot/danger are aggregate-free)."""
    return np.array([2.0 * sc.gamma1 * sigma_hat[0], 2.0 * sc.gamma1 * sigma_hat[1]])


def sigma_central(sc: Scenario, positions) -> np.ndarray:
    """Exact aggregate: mean of the bearing vectors over all robots."""
    n = len(positions)
    if n < 1:
        raise ValueError("need at least one robot")
    sx = 0.0
    sy = 0.0
    for p in positions:
        f = phi(sc, p)
        sx += f[0]
        sy += f[1]
    return np.array([sx / n, sy / n])


def circular_variance(sc: Scenario, positions) -> float:
    """1 - |sigma|: zero when all bearings agree, one when they balance out."""
    return 1.0 - float(np.linalg.norm(sigma_central(sc, positions)))


def _local_cost(sc: Scenario, i: int, p, sigma) -> float:
    c = sc.gamma1 * (sigma[0] * sigma[0] + sigma[1] * sigma[1])
    g2 = sc.gamma2_for(i)
    if g2 > 0.0:
        s = sc.spots[i]
        dx = p[0] - s[0]
        dy = p[1] - s[1]
        c += g2 * (dx * dx + dy * dy)
    if sc.gamma3 > 0.0:
        for gauss in sc.danger:
            c += sc.gamma3 * gauss.value(p)
    return c


def danger_value(sc: Scenario, p) -> float:
    """Raw danger-field value at p (unweighted sum of the Gaussian bumps)."""
    return sum(g.value(p) for g in sc.danger)


def cost_state(sc: Scenario, states) -> float:
    """Full objective over robot states: sum_i l_i(x_i, sigma(x))."""
    positions = [np.asarray(x, dtype=float)[:2] for x in states]
    sigma = sigma_central(sc, positions)
    return sum(_local_cost(sc, i, p, sigma) for i, p in enumerate(positions))


def cost_central(sc: Scenario, models, u) -> float:
    """Reduced objective over stacked setpoints u in R^{2N}: every plant at steady state."""
    u = np.asarray(u, dtype=float)
    states = [plants.steady_state(m, u[2 * i : 2 * i + 2]) for i, m in enumerate(models)]
    return cost_state(sc, states)


def grad_reduced_central(sc: Scenario, models, u) -> np.ndarray:
    """Exact gradient of the reduced objective, stacked in R^{2N}.

    Per robot: (Dh)^T [ grad1 + (Dphi)^T (mean_j grad2_j) ] evaluated at the
    steady states, with the aggregate computed exactly.
    """
    u = np.asarray(u, dtype=float)
    n = len(models)
    states = [plants.steady_state(m, u[2 * i : 2 * i + 2]) for i, m in enumerate(models)]
    positions = [plants.position(m, x) for m, x in zip(models, states)]
    sigma = sigma_central(sc, positions)
    # grad2 is independent of the robot state here, but keep the mean explicit
    mean_g2 = np.zeros(2)
    for _ in range(n):
        mean_g2 += grad2_cost(sc, sigma)
    mean_g2 /= n
    out = np.zeros(2 * n)
    for i, (m, x) in enumerate(zip(models, states)):
        inner = grad1_cost(sc, i, x)
        lift = grad_phi_transpose_apply(sc, positions[i], mean_g2)
        inner[0] += lift[0]
        inner[1] += lift[1]
        out[2 * i : 2 * i + 2] = plants.jacobian_h_transpose_apply(m, u[2 * i : 2 * i + 2], inner)
    return out


def _grad_reduced_positions(sc: Scenario, positions: np.ndarray) -> np.ndarray:
    """Vectorized reduced gradient over an (N, 2) matrix of steady-state positions.

    Equals grad_reduced_central (all supported plants have steady-state
    position equal to the setpoint); used on the hot path of the stopping
    oracle. Returns shape (N, 2).
    """
    p = np.asarray(positions, dtype=float)
    n = p.shape[0]
    d = p - np.asarray(sc.target)
    r2 = (d * d).sum(axis=1)
    r = np.sqrt(r2)
    near = r < sc.rho_min
    unit = np.empty_like(d)
    safe_r = np.where(near, 1.0, r)
    unit[:, 0] = np.where(near, 1.0, d[:, 0] / safe_r)
    unit[:, 1] = np.where(near, 0.0, d[:, 1] / safe_r)
    sigma = unit.mean(axis=0)
    mean_g2 = 2.0 * sc.gamma1 * sigma
    grad1 = np.zeros_like(p)
    if sc.gamma2 > 0.0 and sc.spots:
        for i, s in sc.spots.items():
            grad1[i, 0] += 2.0 * sc.gamma2 * (p[i, 0] - s[0])
            grad1[i, 1] += 2.0 * sc.gamma2 * (p[i, 1] - s[1])
    if sc.gamma3 > 0.0 and sc.danger:
        for g in sc.danger:
            dd = p - np.asarray(g.mu)
            s2 = g.s * g.s
            e = g.amp * np.exp(-(dd * dd).sum(axis=1) / (2.0 * s2))
            grad1 -= sc.gamma3 * dd * (e / s2)[:, None]
    rho2 = np.maximum(r2, sc.rho_min * sc.rho_min)
    coef = (-unit[:, 1] * mean_g2[0] + unit[:, 0] * mean_g2[1]) / rho2
    lift = np.empty_like(p)
    lift[:, 0] = -d[:, 1] * coef
    lift[:, 1] = d[:, 0] * coef
    return grad1 + lift


# --- scenario (de)serialization -------------------------------------------------

def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "target": list(sc.target),
        "gammas": [sc.gamma1, sc.gamma2, sc.gamma3],
        "spots": [{"robot": i, "point": list(s)} for i, s in sorted(sc.spots.items())],
        "gaussians": [{"mu": list(g.mu), "s": g.s, "amp": g.amp} for g in sc.danger],
        "rho_min": sc.rho_min,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    gammas = doc.get("gammas", [1.0, 0.0, 0.0])
    return Scenario(
        target=tuple(doc.get("target", (0.0, 0.0))),
        gamma1=float(gammas[0]),
        gamma2=float(gammas[1]),
        gamma3=float(gammas[2]),
        spots={int(e["robot"]): tuple(e["point"]) for e in doc.get("spots", [])},
        danger=tuple(
            DangerGaussian(mu=tuple(e["mu"]), s=float(e["s"]), amp=float(e.get("amp", 1.0)))
            for e in doc.get("gaussians", [])
        ),
        rho_min=float(doc.get("rho_min", DEFAULT_RHO_MIN)),
    )


def scenario_to_json(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2)


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_dict(json.loads(text))
