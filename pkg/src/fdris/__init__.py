"""Covert communication through a frequency-diverse reconfigurable surface."""

from .covert import CovertConfig, covert_power_budget, dep, log_mgf, optimal_dep, optimal_threshold, rate_bob
from .geometry import RisGeometry, SphericalPosition, draw_channel
from .model import BeamState, align_delays, beampattern_conventional, beampattern_fdris
from .optimizer import SolverOptions, alternate
from .scenario import Scenario, load_scenario, preset

__version__ = "0.1.0"

__all__ = [
    "BeamState",
    "CovertConfig",
    "RisGeometry",
    "Scenario",
    "SolverOptions",
    "SphericalPosition",
    "align_delays",
    "alternate",
    "beampattern_conventional",
    "beampattern_fdris",
    "covert_power_budget",
    "dep",
    "draw_channel",
    "load_scenario",
    "log_mgf",
    "optimal_dep",
    "optimal_threshold",
    "preset",
    "rate_bob",
]
