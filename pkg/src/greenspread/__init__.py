"""Green-behaviour diffusion on synthetic bank-company multilayer networks."""

from .engine import SimulationState, SpreadParams, Trajectory, run_simulation
from .errors import ConfigError, SweepError
from .kernel import BACKENDS, DEFAULT_BACKEND
from .metrics import StepMetrics, compute_step_metrics
from .netgen import BankProfile, MultilayerNetwork, NetworkConfig, assemble_network

__version__ = "0.1.0"

__all__ = [
    "BACKENDS",
    "BankProfile",
    "ConfigError",
    "DEFAULT_BACKEND",
    "MultilayerNetwork",
    "NetworkConfig",
    "SimulationState",
    "SpreadParams",
    "StepMetrics",
    "SweepError",
    "Trajectory",
    "assemble_network",
    "compute_step_metrics",
    "run_simulation",
]
