"""Flat array layout of one trial, shared by both stepper backends.

Everything the per-step loop touches lives in preallocated float64/int64
arrays so the compiled stepper can run without object traffic and the
pure-Python stepper can mirror it operation for operation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import costs, plants
from ..controller import AlgoParams
from ..graph import CommGraph
from ..safety import SafetyConfig

STATE_PAD = 4  # widest plant state (planar quadrotor)

# plant parameter row layout (meaning depends on the kind code)
#   single integrator: [k, -, -, -, -, -]
#   unicycle:          [k_v, k_alpha, k_beta, v_max, omega_max, -]
#   quadrotor:         [k_p, k_d, -, -, -, -]
PPARAM_COLS = 6


@dataclass
class PackedTrial:
    n: int
    kinds: np.ndarray          # (n,) int64 plant kind codes
    state_dims: np.ndarray     # (n,) int64
    pparams: np.ndarray        # (n, PPARAM_COLS)
    x: np.ndarray              # (n, STATE_PAD) padded plant states
    u: np.ndarray              # (n, 2)
    w: np.ndarray              # (n, 2)
    z: np.ndarray              # (n, 2)
    xi: np.ndarray             # (n,)
    hat_w: np.ndarray          # (n, 2)
    hat_z: np.ndarray          # (n, 2)
    hat_phi: np.ndarray        # (n, 2)
    hat_g2: np.ndarray         # (n, 2)
    g_dir: np.ndarray          # (n, 2) cached descent direction at the current state
    e_prev: np.ndarray         # (n,) error norm at the previous step boundary
    # graph in CSR form over in-neighbors
    indptr: np.ndarray         # (n+1,) int64
    indices: np.ndarray        # (nnz,) int64
    weights: np.ndarray        # (nnz,)
    # scenario
    target: np.ndarray         # (2,)
    gamma1: float
    gamma3: float
    gamma2_eff: np.ndarray     # (n,) per-robot spot weight (0 without a spot)
    spots: np.ndarray          # (n, 2)
    gauss: np.ndarray          # (n_gauss, 4) rows (mu_x, mu_y, s, amp)
    rho_min: float
    # gains
    alpha1: float
    alpha2: float
    lam: float
    nu: float
    # safety
    safety_on: bool
    delta: float
    kappa: float
    sensing_radius: float
    # integration
    dt: float
    force_trigger: bool
    # per-agent event statistics
    trig_count: np.ndarray     # (n,) int64
    last_trig_t: np.ndarray    # (n,)
    last_trig_step: np.ndarray  # (n,) int64
    min_gap: np.ndarray        # (n,)
    m_max: np.ndarray          # (n,) max observed d|e|/dt between events
    ev_after1: np.ndarray      # (n,) int64 triggers after t > 1 s
    consec_after1: np.ndarray  # (n,) int64 consecutive-step triggers after t > 1 s
    zeno_log_min: np.ndarray   # (n,) min over events of log(gap) + nu * t_event
    trig_in_chunk: np.ndarray  # (n,) int64, reset by the driver each chunk
    # trial-level monitors (1- or 2-element arrays mutated in place)
    sum_w_max: np.ndarray      # (2,) running max |sum_i w_i| per component
    sum_z_max: np.ndarray      # (2,)
    min_pair_dist: np.ndarray  # (1,)
    safety_infeasible: np.ndarray  # (1,) int64 count of flagged filter steps
    scratch: dict = field(default_factory=dict)


def pack_trial(
    graph: CommGraph,
    scenario: costs.Scenario,
    models,
    params: AlgoParams,
    safety_cfg: SafetyConfig,
    x0_list,
    dt: float,
    force_trigger: bool = False,
) -> PackedTrial:
    """Build the packed arrays for one trial from the module-level objects.

    Initialization mirrors the controller contract: trackers at zero,
    sampled values consistent with the initial state (the t=0 broadcast),
    setpoints at the initial positions.
    """
    n = graph.n
    if len(models) != n or len(x0_list) != n:
        raise ValueError("graph, models and initial states must agree on the agent count")
    kinds = np.zeros(n, dtype=np.int64)
    state_dims = np.zeros(n, dtype=np.int64)
    pparams = np.zeros((n, PPARAM_COLS))
    x = np.zeros((n, STATE_PAD))
    u = np.zeros((n, 2))
    hat_phi = np.zeros((n, 2))
    hat_g2 = np.zeros((n, 2))
    for i, m in enumerate(models):
        kinds[i] = int(m.kind)
        state_dims[i] = m.state_dim
        if m.kind == plants.PlantKind.SINGLE_INTEGRATOR:
            pparams[i, 0] = m.k
        elif m.kind == plants.PlantKind.UNICYCLE:
            pparams[i, :5] = (m.k_v, m.k_alpha, m.k_beta, m.v_max, m.omega_max)
        else:
            pparams[i, :2] = (m.k_p, m.k_d)
        xi0 = np.asarray(x0_list[i], dtype=float)
        if xi0.shape != (m.state_dim,):
            raise ValueError(f"agent {i}: initial state must have shape ({m.state_dim},)")
        x[i, : m.state_dim] = xi0
        p0 = plants.position(m, xi0)
        u[i] = p0
        hat_phi[i] = costs.phi(scenario, p0)
        hat_g2[i] = costs.grad2_cost(scenario, hat_phi[i])  # w(0) = 0
    indptr = np.zeros(n + 1, dtype=np.int64)
    idx = []
    wts = []
    for i in range(n):
        nbrs = graph.in_neighbors[i]
        idx.extend(int(j) for j in nbrs)
        wts.extend(float(graph.weights[i, j]) for j in nbrs)
        indptr[i + 1] = len(idx)
    gamma2_eff = np.zeros(n)
    spots = np.zeros((n, 2))
    for i in range(n):
        if i in scenario.spots:
            gamma2_eff[i] = scenario.gamma2
            spots[i] = scenario.spots[i]
    gauss = np.zeros((len(scenario.danger), 4))
    for k, g in enumerate(scenario.danger):
        gauss[k] = (g.mu[0], g.mu[1], g.s, g.amp)
    pt = PackedTrial(
        n=n,
        kinds=kinds,
        state_dims=state_dims,
        pparams=pparams,
        x=x,
        u=u,
        w=np.zeros((n, 2)),
        z=np.zeros((n, 2)),
        xi=np.full(n, params.xi0),
        hat_w=np.zeros((n, 2)),
        hat_z=np.zeros((n, 2)),
        hat_phi=hat_phi,
        hat_g2=hat_g2,
        g_dir=np.zeros((n, 2)),
        e_prev=np.zeros(n),
        indptr=indptr,
        indices=np.asarray(idx, dtype=np.int64),
        weights=np.asarray(wts, dtype=float),
        target=np.asarray(scenario.target, dtype=float),
        gamma1=scenario.gamma1,
        gamma3=scenario.gamma3,
        gamma2_eff=gamma2_eff,
        spots=spots,
        gauss=gauss,
        rho_min=scenario.rho_min,
        alpha1=params.alpha1,
        alpha2=params.alpha2,
        lam=params.lam,
        nu=params.nu,
        safety_on=safety_cfg.enabled,
        delta=safety_cfg.delta,
        kappa=safety_cfg.kappa,
        sensing_radius=safety_cfg.sensing_radius,
        dt=dt,
        force_trigger=force_trigger,
        trig_count=np.zeros(n, dtype=np.int64),
        last_trig_t=np.zeros(n),
        last_trig_step=np.zeros(n, dtype=np.int64),
        min_gap=np.full(n, np.inf),
        m_max=np.zeros(n),
        ev_after1=np.zeros(n, dtype=np.int64),
        consec_after1=np.zeros(n, dtype=np.int64),
        zeno_log_min=np.full(n, np.inf),
        trig_in_chunk=np.zeros(n, dtype=np.int64),
        sum_w_max=np.zeros(2),
        sum_z_max=np.zeros(2),
        min_pair_dist=np.array([np.inf]),
        safety_infeasible=np.zeros(1, dtype=np.int64),
    )
    _seed_direction_cache(pt)
    return pt


def _seed_direction_cache(pt: PackedTrial) -> None:
    """Fill the cached descent directions and error norms at t = 0."""
    from . import _stepper_py

    _stepper_py.refresh_direction_cache(pt)
