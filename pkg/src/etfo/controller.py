"""Per-robot event-triggered feedback-optimization controller.

Each robot integrates a setpoint flow along the measured descent direction
and two consensus trackers: w estimates the gap between its own bearing and
the network aggregate, z the gap between its own aggregate-gradient and the
network mean. The consensus flows mix *sampled* quantities only (own and
neighbors' last-broadcast values); a robot re-samples and broadcasts when
its locally computable error exceeds a state-dependent threshold made of a
relative term (lam * |direction|) plus an exponentially decaying slack xi
that rules out Zeno behavior.

These operations define the single-robot semantics and work on one robot's
state at a time. The simulation loop in ``sim`` evaluates the same math
over packed arrays; ``tests`` cross-check the two paths step by step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import costs, plants
from .errors import ProtocolViolation
from .graph import CommGraph


@dataclass(frozen=True)
class AlgoParams:
    """Controller gains.

    alpha1 scales the (slow) setpoint flow, alpha2 the (fast) consensus
    flows (rate 1/alpha2), lam the trigger sensitivity, nu the decay rate of
    the trigger slack and xi0 its (nonzero) initial value.
    """

    alpha1: float = 0.5
    alpha2: float = 0.01
    lam: float = 0.05
    nu: float = 1.0
    xi0: float = 0.01

    def __post_init__(self):
        if self.alpha1 <= 0 or self.alpha2 <= 0 or self.nu <= 0:
            raise ValueError("alpha1, alpha2, nu must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.xi0 == 0:
            raise ValueError("xi0 must be nonzero (Zeno exclusion)")


@dataclass(frozen=True)
class Payload:
    """What a robot broadcasts at a trigger: 2d = 4 floats."""

    sender: int
    vec_w: tuple  # hat_w + hat_phi
    vec_z: tuple  # hat_z + hat_g2


@dataclass
class ControllerState:
    """Mutable per-robot controller memory."""

    agent_id: int
    u: np.ndarray
    w: np.ndarray
    z: np.ndarray
    xi: float
    hat_w: np.ndarray
    hat_z: np.ndarray
    hat_phi: np.ndarray
    hat_g2: np.ndarray
    inbox: dict = field(default_factory=dict)
    trigger_count: int = 0
    last_trigger_time: float = 0.0


@dataclass(frozen=True)
class FlowDerivatives:
    du: np.ndarray
    dw: np.ndarray
    dz: np.ndarray
    dxi: float


def init_controller(
    sc: costs.Scenario,
    model: plants.PlantModel,
    agent_id: int,
    x0,
    params: AlgoParams,
) -> tuple:
    """Controller state at t=0 plus the initial broadcast payload.

    Trackers start at zero, sampled values at their current counterparts
    (so the local error starts at zero), and the setpoint at the robot's
    initial position to avoid a startup transient.
    """
    x0 = np.asarray(x0, dtype=float)
    p0 = plants.position(model, x0)
    phi0 = costs.phi(sc, p0)
    g2_0 = costs.grad2_cost(sc, phi0)  # sigma_hat(0) = w(0) + phi(x0) = phi(x0)
    cs = ControllerState(
        agent_id=agent_id,
        u=p0.copy(),
        w=np.zeros(2),
        z=np.zeros(2),
        xi=params.xi0,
        hat_w=np.zeros(2),
        hat_z=np.zeros(2),
        hat_phi=phi0.copy(),
        hat_g2=g2_0.copy(),
    )
    return cs, make_payload(cs)


def make_payload(cs: ControllerState) -> Payload:
    return Payload(
        sender=cs.agent_id,
        vec_w=(cs.hat_w[0] + cs.hat_phi[0], cs.hat_w[1] + cs.hat_phi[1]),
        vec_z=(cs.hat_z[0] + cs.hat_g2[0], cs.hat_z[1] + cs.hat_g2[1]),
    )


def receive(cs: ControllerState, payload: Payload) -> None:
    cs.inbox[payload.sender] = payload


def direction(sc: costs.Scenario, model: plants.PlantModel, x, cs: ControllerState) -> np.ndarray:
    """Measured descent direction using the local aggregate estimate w + phi(x)."""
    x = np.asarray(x, dtype=float)
    p = plants.position(model, x)
    phi_i = costs.phi(sc, p)
    sigma_hat = np.array([cs.w[0] + phi_i[0], cs.w[1] + phi_i[1]])
    g2 = costs.grad2_cost(sc, sigma_hat)
    v = np.array([g2[0] + cs.z[0], g2[1] + cs.z[1]])
    inner = costs.grad1_cost(sc, cs.agent_id, x)
    lift = costs.grad_phi_transpose_apply(sc, p, v)
    inner[0] += lift[0]
    inner[1] += lift[1]
    return plants.jacobian_h_transpose_apply(model, cs.u, inner)


def error(cs: ControllerState, sc: costs.Scenario, model: plants.PlantModel, x) -> tuple:
    """Sampling errors (e_w, e_z) between current and last-broadcast quantities."""
    x = np.asarray(x, dtype=float)
    p = plants.position(model, x)
    phi_i = costs.phi(sc, p)
    sigma_hat = np.array([cs.w[0] + phi_i[0], cs.w[1] + phi_i[1]])
    g2 = costs.grad2_cost(sc, sigma_hat)
    e_w = np.array(
        [cs.w[0] - cs.hat_w[0] + phi_i[0] - cs.hat_phi[0],
         cs.w[1] - cs.hat_w[1] + phi_i[1] - cs.hat_phi[1]]
    )
    e_z = np.array(
        [cs.z[0] - cs.hat_z[0] + g2[0] - cs.hat_g2[0],
         cs.z[1] - cs.hat_z[1] + g2[1] - cs.hat_g2[1]]
    )
    return e_w, e_z


def error_norm(cs: ControllerState, sc: costs.Scenario, model: plants.PlantModel, x) -> float:
    e_w, e_z = error(cs, sc, model, x)
    return math.sqrt(e_w[0] * e_w[0] + e_w[1] * e_w[1] + e_z[0] * e_z[0] + e_z[1] * e_z[1])


def should_trigger(
    cs: ControllerState,
    sc: costs.Scenario,
    model: plants.PlantModel,
    x,
    params: AlgoParams,
) -> bool:
    """Locally verifiable test: |(e_w, e_z)| > lam * |direction| + |xi|."""
    e = error_norm(cs, sc, model, x)
    g = direction(sc, model, x, cs)
    thr = params.lam * math.sqrt(g[0] * g[0] + g[1] * g[1]) + abs(cs.xi)
    return e > thr


def on_trigger(
    cs: ControllerState,
    sc: costs.Scenario,
    model: plants.PlantModel,
    x,
    t: float = 0.0,
) -> Payload:
    """Re-sample all broadcast quantities from current values; returns the payload.

    Immediately afterwards the local error is exactly zero.
    """
    x = np.asarray(x, dtype=float)
    p = plants.position(model, x)
    phi_i = costs.phi(sc, p)
    sigma_hat = np.array([cs.w[0] + phi_i[0], cs.w[1] + phi_i[1]])
    cs.hat_w = cs.w.copy()
    cs.hat_phi = phi_i.copy()
    cs.hat_z = cs.z.copy()
    cs.hat_g2 = costs.grad2_cost(sc, sigma_hat)
    cs.trigger_count += 1
    cs.last_trigger_time = t
    return make_payload(cs)


def flow(
    cs: ControllerState,
    sc: costs.Scenario,
    model: plants.PlantModel,
    x,
    g: CommGraph,
    params: AlgoParams,
) -> FlowDerivatives:
    """Controller derivatives from the current snapshot.

    The consensus terms mix the robot's own *sampled* sums against the
    neighbors' last payloads; using sampled (not current) own values is what
    keeps the tracker means exactly conserved on balanced graphs.
    """
    du_dir = direction(sc, model, x, cs)
    du = np.array([-params.alpha1 * du_dir[0], -params.alpha1 * du_dir[1]])
    own_w = (cs.hat_w[0] + cs.hat_phi[0], cs.hat_w[1] + cs.hat_phi[1])
    own_z = (cs.hat_z[0] + cs.hat_g2[0], cs.hat_z[1] + cs.hat_g2[1])
    acc_w = [0.0, 0.0]
    acc_z = [0.0, 0.0]
    i = cs.agent_id
    for j in g.in_neighbors[i]:
        pj = cs.inbox.get(int(j))
        if pj is None:
            raise ProtocolViolation(f"agent {i} has no payload from in-neighbor {j}")
        a = g.weights[i, j]
        acc_w[0] += a * (own_w[0] - pj.vec_w[0])
        acc_w[1] += a * (own_w[1] - pj.vec_w[1])
        acc_z[0] += a * (own_z[0] - pj.vec_z[0])
        acc_z[1] += a * (own_z[1] - pj.vec_z[1])
    inv_a2 = 1.0 / params.alpha2
    dw = np.array([-inv_a2 * acc_w[0], -inv_a2 * acc_w[1]])
    dz = np.array([-inv_a2 * acc_z[0], -inv_a2 * acc_z[1]])
    dxi = -params.nu * cs.xi
    return FlowDerivatives(du=du, dw=dw, dz=dz, dxi=dxi)
