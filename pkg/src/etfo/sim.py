"""Deterministic fixed-step orchestration of one trial.

Integrates all plants and controllers with forward Euler, evaluates the
triggering protocol once per step, applies the optional safety filter, and
evaluates a centralized stationarity oracle every ``record_every`` steps;
the oracle is measurement-only and never feeds the controllers. Identical
(seed, config) inputs produce bit-identical results for a given backend.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import costs, plants
from ._core import get_stepper, resolve_backend
from ._core.pack import PackedTrial, pack_trial
from .controller import AlgoParams
from .errors import SimulationDiverged
from .graph import CommGraph
from .safety import SafetyConfig


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    t_max: float = 200.0
    stop_tol: float = 5e-2
    record_every: int = 10
    seed: int = 0
    init_box: float = 4.0
    backend: str = "auto"
    force_trigger: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max <= self.dt:
            raise ValueError("t_max must exceed dt")
        if self.stop_tol <= 0:
            raise ValueError("stop_tol must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


TRACE_AGENT_COLS = ("p1", "p2", "u1", "u2", "enorm", "gnorm", "xi", "trig", "trigcount")


@dataclass
class Trace:
    """Decimated per-step records; one row every ``record_every`` steps."""

    n: int
    rows: list = field(default_factory=list)

    def header(self) -> list:
        cols = ["t", "grad_norm", "sigma_err_max"]
        for i in range(self.n):
            cols.extend(f"{name}_{i}" for name in TRACE_AGENT_COLS)
        return cols

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(self.header())
            wr.writerows(self.rows)


@dataclass
class TrialResult:
    n: int
    converged: bool
    convergence_time: float
    t_final: float
    steps_total: int
    final_grad_norm: float
    final_sigma_norm: float
    events_total: int
    events_per_agent: float
    trigger_counts: list
    min_inter_event_time: float
    min_pairwise_distance: float
    tracking_w_err: float
    tracking_z_err: float
    sum_w_max: float
    sum_z_max: float
    zeno_m_max: float
    zeno_condition_ok: bool
    consec_trigger_frac_max: float
    safety_infeasible_steps: int
    backend: str
    seed: int
    dt: float
    stop_tol: float
    graph_edges: list
    trace: Trace = None

    def to_dict(self) -> dict:
        def _clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        d = {
            "n": self.n,
            "converged": self.converged,
            "convergence_time": _clean(self.convergence_time),
            "t_final": self.t_final,
            "steps_total": self.steps_total,
            "final_grad_norm": self.final_grad_norm,
            "final_sigma_norm": self.final_sigma_norm,
            "events_total": self.events_total,
            "events_per_agent": self.events_per_agent,
            "trigger_counts": list(self.trigger_counts),
            "min_inter_event_time": _clean(self.min_inter_event_time),
            "min_pairwise_distance": _clean(self.min_pairwise_distance),
            "tracking_w_err": self.tracking_w_err,
            "tracking_z_err": self.tracking_z_err,
            "sum_w_max": self.sum_w_max,
            "sum_z_max": self.sum_z_max,
            "zeno_m_max": self.zeno_m_max,
            "zeno_condition_ok": self.zeno_condition_ok,
            "consec_trigger_frac_max": self.consec_trigger_frac_max,
            "safety_infeasible_steps": self.safety_infeasible_steps,
            "backend": self.backend,
            "seed": self.seed,
            "dt": self.dt,
            "stop_tol": self.stop_tol,
            "graph_edges": self.graph_edges,
        }
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def sample_initial_states(rng, models, box: float, min_sep: float = 0.0, max_tries: int = 1000):
    """Uniform positions in [-box, box]^2; non-position states start at zero.

    With a positive ``min_sep`` the draw is rejected until all pairwise
    distances reach it.
    """
    n = len(models)
    for _ in range(max_tries):
        pos = rng.uniform(-box, box, size=(n, 2))
        if min_sep > 0.0 and n > 1:
            d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=-1)
            np.fill_diagonal(d2, np.inf)
            if d2.min() < min_sep * min_sep:
                continue
        states = []
        for i, m in enumerate(models):
            xi = np.zeros(m.state_dim)
            xi[:2] = pos[i]
            states.append(xi)
        return states
    raise RuntimeError(f"could not sample positions with separation {min_sep} in {max_tries} tries")


def _sigma_and_errors(pt: PackedTrial, sc: costs.Scenario):
    """Aggregate of the current states and per-agent estimate errors."""
    pos = pt.x[:, :2]
    phis = np.array([costs.phi(sc, p) for p in pos])
    sigma = phis.mean(axis=0)
    est = pt.w + phis
    errs = np.linalg.norm(est - sigma, axis=1)
    return sigma, errs


def _tracking_errors(pt: PackedTrial, sc: costs.Scenario):
    pos = pt.x[:, :2]
    phis = np.array([costs.phi(sc, p) for p in pos])
    sigma = phis.mean(axis=0)
    w_err = float(np.max(np.linalg.norm(pt.w + phis - sigma, axis=1)))
    sig_hat = pt.w + phis
    s_i = 2.0 * sc.gamma1 * sig_hat  # aggregate-gradient signal per robot
    z_err = float(np.max(np.linalg.norm(pt.z + s_i - (pt.z + s_i).mean(axis=0), axis=1)))
    return w_err, z_err, float(np.linalg.norm(sigma))


def _check_finite(pt: PackedTrial, t: float) -> None:
    for name, arr in (("x", pt.x), ("u", pt.u), ("w", pt.w), ("z", pt.z)):
        if not np.all(np.isfinite(arr)):
            bad = float(np.nanmax(np.abs(arr[np.isfinite(arr)]))) if np.any(np.isfinite(arr)) else float("nan")
            raise SimulationDiverged(t, f"non-finite entries in {name} (max finite magnitude {bad:.3e})")


def _zeno_condition_ok(pt: PackedTrial, xi0: float) -> bool:
    """Necessary-condition monitor: every observed gap satisfies
    M * gap >= |xi(0)| * exp(-nu * t_event), with M the max observed error rate."""
    for i in range(pt.n):
        if pt.trig_count[i] == 0:
            continue
        m = pt.m_max[i]
        if m <= 0.0:
            continue
        if pt.zeno_log_min[i] < math.log(abs(xi0)) - math.log(m) - 1e-9:
            return False
    return True


def run_trial(
    graph: CommGraph,
    scenario: costs.Scenario,
    models,
    params: AlgoParams,
    safety_cfg: SafetyConfig,
    cfg: SimConfig,
) -> TrialResult:
    """Run one event-triggered trial to stationarity or the time horizon."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    min_sep = 2.0 * safety_cfg.delta if safety_cfg.enabled else 0.0
    x0 = sample_initial_states(rng, models, cfg.init_box, min_sep=min_sep)
    return run_trial_from(graph, scenario, models, params, safety_cfg, cfg, x0)


def run_trial_from(
    graph: CommGraph,
    scenario: costs.Scenario,
    models,
    params: AlgoParams,
    safety_cfg: SafetyConfig,
    cfg: SimConfig,
    x0_list,
) -> TrialResult:
    """Same as run_trial but with caller-supplied initial states."""
    backend = resolve_backend(cfg.backend)
    stepper = get_stepper(backend)
    pt = pack_trial(
        graph,
        scenario,
        models,
        params,
        safety_cfg,
        x0_list,
        dt=cfg.dt,
        force_trigger=cfg.force_trigger,
    )
    # t = 0 snapshot enters the pairwise-distance monitor
    if pt.n > 1:
        d0 = pt.x[:, None, :2] - pt.x[None, :, :2]
        dist0 = np.sqrt((d0 ** 2).sum(axis=-1))
        pt.min_pair_dist[0] = float(dist0[np.triu_indices(pt.n, k=1)].min())

    n_total = int(round(cfg.t_max / cfg.dt))
    trace = Trace(n=pt.n)
    converged = False
    convergence_time = float("nan")
    step = 0

    def _record(t: float, gnorm: float):
        _, errs = _sigma_and_errors(pt, scenario)
        row = [t, gnorm, float(errs.max())]
        for i in range(pt.n):
            row.extend(
                (
                    float(pt.x[i, 0]),
                    float(pt.x[i, 1]),
                    float(pt.u[i, 0]),
                    float(pt.u[i, 1]),
                    float(pt.e_prev[i]),
                    float(math.hypot(pt.g_dir[i, 0], pt.g_dir[i, 1])),
                    float(pt.xi[i]),
                    int(pt.trig_in_chunk[i]),
                    int(pt.trig_count[i]),
                )
            )
        trace.rows.append(row)
        pt.trig_in_chunk[:] = 0

    gnorm = float(np.linalg.norm(costs._grad_reduced_positions(scenario, pt.u)))
    _record(0.0, gnorm)
    if gnorm <= cfg.stop_tol:
        converged = True
        convergence_time = 0.0
    while not converged and step < n_total:
        chunk = min(cfg.record_every, n_total - step)
        stepper(pt, step, chunk)
        step += chunk
        t = step * cfg.dt
        _check_finite(pt, t)
        gnorm = float(np.linalg.norm(costs._grad_reduced_positions(scenario, pt.u)))
        _record(t, gnorm)
        if gnorm <= cfg.stop_tol:
            converged = True
            convergence_time = t
            break

    t_final = step * cfg.dt
    w_err, z_err, sigma_norm = _tracking_errors(pt, scenario)
    events_total = int(pt.trig_count.sum())
    gaps = pt.min_gap[np.isfinite(pt.min_gap)]
    min_gap = float(gaps.min()) if gaps.size else float("inf")
    ev = pt.ev_after1.astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(ev > 0, pt.consec_after1 / np.maximum(ev, 1.0), 0.0)
    return TrialResult(
        n=pt.n,
        converged=converged,
        convergence_time=convergence_time,
        t_final=t_final,
        steps_total=step,
        final_grad_norm=gnorm,
        final_sigma_norm=sigma_norm,
        events_total=events_total,
        events_per_agent=events_total / pt.n,
        trigger_counts=[int(c) for c in pt.trig_count],
        min_inter_event_time=min_gap,
        min_pairwise_distance=float(pt.min_pair_dist[0]),
        tracking_w_err=w_err,
        tracking_z_err=z_err,
        sum_w_max=float(pt.sum_w_max.max()),
        sum_z_max=float(pt.sum_z_max.max()),
        zeno_m_max=float(pt.m_max.max()),
        zeno_condition_ok=_zeno_condition_ok(pt, params.xi0),
        consec_trigger_frac_max=float(frac.max()),
        safety_infeasible_steps=int(pt.safety_infeasible[0]),
        backend=backend,
        seed=cfg.seed,
        dt=cfg.dt,
        stop_tol=cfg.stop_tol,
        graph_edges=graph.edges(),
        trace=trace,
    )


def run_continuous_baseline(
    graph: CommGraph,
    scenario: costs.Scenario,
    models,
    params: AlgoParams,
    cfg: SimConfig,
    safety_cfg: SafetyConfig = None,
) -> TrialResult:
    """Dense-communication reference: neighbors exchange current values every step.

    Identical to a trial with per-step forced triggering; used as the
    discretized continuous-communication baseline.
    """
    cfg_forced = SimConfig(
        dt=cfg.dt,
        t_max=cfg.t_max,
        stop_tol=cfg.stop_tol,
        record_every=cfg.record_every,
        seed=cfg.seed,
        init_box=cfg.init_box,
        backend=cfg.backend,
        force_trigger=True,
    )
    if safety_cfg is None:
        safety_cfg = SafetyConfig(enabled=False)
    return run_trial(graph, scenario, models, params, safety_cfg, cfg_forced)
