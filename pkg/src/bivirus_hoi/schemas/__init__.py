"""
Data Schemas - Pydantic Validation Models

Everything that crosses a file boundary (scenario files, JSON reports,
CSV rows) is described here; the published JSON schema is generated from
these models by the ``schema`` CLI subcommand.

Schema Types:
- scenario.py: ScenarioConfig, VirusConfig, Hyperedge, SimulationSettings
- equilibrium.py: EquilibriumRecord, EquilibriumCatalog, ConditionCheck, ConditionReport
- simulation.py: TrajectoryReport, CensusRun, CensusSummary

Schemas never import the domain layer at module level.
"""
