"""
Bivirus HOI - Competitive Bivirus Epidemics on Hypergraphs

A numerical library and CLI for two competing SIS viruses spreading over a
network with pairwise and higher-order (hyperedge) contagion.

Core Components:
- Domain Layer: vector field and Jacobian, spectral tools, equilibrium finders,
  sufficient-condition checkers, guarded integration and convergence census
- Application Layer: scenario loading and analysis orchestration
- Schemas: Pydantic models for scenario files and JSON reports
- CLI: argparse entry point (simulate, equilibria, conditions, census, builtin, schema)
- Utils: logging and CSV I/O

Configuration is read from ``BIVIRUS_*`` environment variables or ``.env``.
"""

__version__ = "0.1.0"
