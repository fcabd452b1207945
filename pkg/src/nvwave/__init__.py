"""Conservative solutions of the regularized nonlinear variational wave system
via a Lagrangian reformulation and a characteristic Goursat solver."""

from .eulerian import EulerianState, from_primitives, zero_state
from .evolution import SolverParams, evolve, evolve_many
from .lagrangian import map_C, map_L
from .measures import RadonMeasure
from .scenario import Scenario, bundled, load
from .wavespeed import SmoothSpeed, from_config

__version__ = "0.1.0"

__all__ = ["EulerianState", "RadonMeasure", "Scenario", "SmoothSpeed", "SolverParams", "bundled",
           "evolve", "evolve_many", "from_config", "from_primitives", "load", "map_C", "map_L",
           "zero_state"]
