"""Event-triggered feedback optimization for multi-robot target encirclement.

A network of pre-stabilized robots cooperatively encircles a target while
monitoring points of interest and avoiding danger zones, exchanging data
only at locally triggered instants. The package provides the per-robot
controller, a deterministic fixed-step network simulator with a compiled
hot loop, and a Monte Carlo benchmark CLI.
"""

from ._core import DEFAULT_BACKEND, HAVE_COMPILED, available_backends
from .controller import AlgoParams, ControllerState, Payload
from .costs import DangerGaussian, Scenario, scenario_from_json, scenario_to_json
from .errors import GraphGenerationError, ProtocolViolation, SimulationDiverged
from .graph import CommGraph, generate_er, laplacian, validate
from .plants import PlantKind, PlantModel, reduced_quadrotor, single_integrator, unicycle
from .safety import SafetyConfig, filter_velocity
from .sim import SimConfig, Trace, TrialResult, run_continuous_baseline, run_trial

__version__ = "0.1.0"

__all__ = [
    "AlgoParams",
    "CommGraph",
    "ControllerState",
    "DangerGaussian",
    "DEFAULT_BACKEND",
    "GraphGenerationError",
    "HAVE_COMPILED",
    "Payload",
    "PlantKind",
    "PlantModel",
    "ProtocolViolation",
    "Scenario",
    "SafetyConfig",
    "SimConfig",
    "SimulationDiverged",
    "Trace",
    "TrialResult",
    "available_backends",
    "filter_velocity",
    "generate_er",
    "laplacian",
    "reduced_quadrotor",
    "run_continuous_baseline",
    "run_trial",
    "scenario_from_json",
    "scenario_to_json",
    "single_integrator",
    "unicycle",
    "validate",
]
