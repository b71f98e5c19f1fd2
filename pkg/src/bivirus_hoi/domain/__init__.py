"""
Domain Layer - Numerical Core

Pure functions over immutable model values.

Modules:
- model_core.py: Model parameters, states, vector field, Jacobian, domain D
- spectral.py: Spectral radius / abscissa, Perron vectors, irreducibility, Hurwitz test
- equilibria.py: Boundary and coexistence equilibrium finders, classification, enumeration
- conditions.py: Sufficient conditions on stability, tristability and coexistence
- dynamics.py: Guarded integration, convergence detection, monotonicity probe, census

Models and states are safe to share across worker threads.
"""

from .model_core import BivirusModel, State, VirusParams
from .equilibria import enumerate_equilibria
from .dynamics import integrate

__all__ = [
    "BivirusModel",
    "State",
    "VirusParams",
    "enumerate_equilibria",
    "integrate",
]
