"""Energy-aware federation of CSPs in cell-free massive MIMO."""

from .config import ConfigError, ExperimentConfig, load_config
from .energy import EnergyParams
from .model import Assignment, FederationProblem, PowerAllocation, verify_solution
from .orchestrator import FederationSolution, SolveOptions, solve
from .scenario import ScenarioConfig, build_scenario

__version__ = "0.1.0"

__all__ = [
    "Assignment", "ConfigError", "EnergyParams", "ExperimentConfig", "FederationProblem",
    "FederationSolution", "PowerAllocation", "ScenarioConfig", "SolveOptions", "build_scenario",
    "load_config", "solve", "verify_solution", "__version__",
]
