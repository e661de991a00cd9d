"""Pre-stabilized robot plant models.

Each model exposes the closed-loop dynamics ``r(x, u)`` of a robot whose
low-level controller tracks a planar setpoint u, together with the
steady-state map ``h(u)`` (the unique equilibrium for constant u) and the
transpose-Jacobian product of h. All three kinds place the planar position
in the first two state components and have h affine with identity position
block, so the Jacobian product reduces to selecting the position entries.

Transcendentals are evaluated through libm (``math`` module) so the
pure-Python stepper and the compiled one produce bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class PlantKind(IntEnum):
    SINGLE_INTEGRATOR = 0
    UNICYCLE = 1
    QUADROTOR = 2


_STATE_DIM = {PlantKind.SINGLE_INTEGRATOR: 2, PlantKind.UNICYCLE: 3, PlantKind.QUADROTOR: 4}

# near-goal radius below which the unicycle switches to pure heading alignment
UNICYCLE_GOAL_EPS = 1e-9


@dataclass(frozen=True)
class PlantModel:
    """One robot's closed-loop model. Immutable.

    Parameters are per-kind: ``k`` (integrator gain), ``k_v/k_alpha/k_beta``
    plus saturations (unicycle pose follower), ``k_p/k_d`` (planar quadrotor
    tracker) and ``z_static`` (constant flight altitude, metadata only).
    """

    kind: PlantKind
    k: float = 1.0
    k_v: float = 1.0
    k_alpha: float = 2.0
    k_beta: float = -0.5
    v_max: float = 0.5
    omega_max: float = 2.0
    k_p: float = 1.0
    k_d: float = 2.0
    z_static: float = 1.0

    @property
    def state_dim(self) -> int:
        return _STATE_DIM[self.kind]


def single_integrator(k: float = 1.0) -> PlantModel:
    return PlantModel(kind=PlantKind.SINGLE_INTEGRATOR, k=k)


def unicycle(
    k_v: float = 1.0,
    k_omega: float = 2.0,
    k_beta: float = -0.5,
    v_max: float = 0.5,
    omega_max: float = 2.0,
) -> PlantModel:
    """Unicycle under a pose-following law steering (p, psi) to (u, 0).

    Polar-error feedback: forward speed from the projected distance, turn
    rate from the heading error toward the line of sight plus a bearing
    term that shapes the approach so the robot arrives heading along the
    reference. Stable for k_omega > k_v and k_beta < 0.
    """
    if not k_omega > k_v > 0:
        raise ValueError("pose follower needs k_omega > k_v > 0")
    if k_beta >= 0:
        raise ValueError("bearing gain k_beta must be negative")
    return PlantModel(
        kind=PlantKind.UNICYCLE,
        k_v=k_v,
        k_alpha=k_omega,
        k_beta=k_beta,
        v_max=v_max,
        omega_max=omega_max,
    )


def reduced_quadrotor(k_p: float = 1.0, k_d: float = 2.0, z_static: float = 1.0) -> PlantModel:
    """Planar closed-loop quadrotor: critically damped second-order setpoint tracker."""
    return PlantModel(kind=PlantKind.QUADROTOR, k_p=k_p, k_d=k_d, z_static=z_static)


def _wrap(a: float) -> float:
    """Wrap angle to (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    return r


def _clip(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def unicycle_commands(m: PlantModel, x, u) -> tuple:
    """Commanded (linear speed, turn rate) of the pose follower, saturated."""
    ex = u[0] - x[0]
    ey = u[1] - x[1]
    r = math.sqrt(ex * ex + ey * ey)
    psi = x[2]
    if r < UNICYCLE_GOAL_EPS:
        return 0.0, _clip(m.k_alpha * _wrap(-psi), -m.omega_max, m.omega_max)
    los = math.atan2(ey, ex)
    alpha = _wrap(los - psi)   # heading error to the line of sight
    beta = _wrap(los)          # approach-direction error (heading reference is 0)
    v = m.k_v * r * math.cos(alpha)
    if v < 0.0:
        v = 0.0  # forward-only: turn in place when the goal is behind
    v = _clip(v, 0.0, m.v_max)
    omega = _clip(m.k_alpha * alpha + m.k_beta * beta, -m.omega_max, m.omega_max)
    return v, omega


def derivative(m: PlantModel, x, u) -> np.ndarray:
    """Closed-loop state derivative r(x, u) for setpoint u in R^2."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (m.state_dim,):
        raise ValueError(f"state must have shape ({m.state_dim},), got {x.shape}")
    if u.shape != (2,):
        raise ValueError(f"setpoint must have shape (2,), got {u.shape}")
    if m.kind == PlantKind.SINGLE_INTEGRATOR:
        return np.array([m.k * (u[0] - x[0]), m.k * (u[1] - x[1])])
    if m.kind == PlantKind.UNICYCLE:
        v, omega = unicycle_commands(m, x, u)
        return np.array([v * math.cos(x[2]), v * math.sin(x[2]), omega])
    # quadrotor: p' = v, v' = k_p (u - p) - k_d v
    return np.array(
        [
            x[2],
            x[3],
            m.k_p * (u[0] - x[0]) - m.k_d * x[2],
            m.k_p * (u[1] - x[1]) - m.k_d * x[3],
        ]
    )


def steady_state(m: PlantModel, u) -> np.ndarray:
    """Equilibrium h(u) for constant u: position equals u, remaining states zero."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(m.state_dim)
    out[0] = u[0]
    out[1] = u[1]
    return out


def jacobian_h_transpose_apply(m: PlantModel, u, v) -> np.ndarray:
    """Apply the transpose Jacobian of h at u to a state-space covector v.

    h is affine with identity position block for every kind, so this is the
    position sub-vector of v.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (m.state_dim,):
        raise ValueError(f"covector must have shape ({m.state_dim},), got {v.shape}")
    return np.array([v[0], v[1]])


def position(m: PlantModel, x) -> np.ndarray:
    """Planar position p(x)."""
    x = np.asarray(x, dtype=float)
    return np.array([x[0], x[1]])
