"""
Application Layer - Use Case Orchestration

Orchestrates domain functions to implement the CLI use cases.

Services:
- scenario_service.py: Loads and validates scenario files, built-in scenarios,
  serialization back to JSON
- analysis_service.py: Simulation, equilibrium enumeration, condition reports and
  convergence census for one loaded scenario

This layer sits between the CLI and the pure numerical domain.
"""

from .scenario_service import LoadedScenario, builtin, load_config, serialize
from .analysis_service import InitialCondition, ScenarioAnalysisService

__all__ = [
    "LoadedScenario",
    "builtin",
    "load_config",
    "serialize",
    "InitialCondition",
    "ScenarioAnalysisService",
]
