"""Shared fixtures: built-in scenarios, a classic (pairwise-only) model and random valid models."""
from typing import Callable

import numpy as np
import pytest

from bivirus_hoi.application.scenario_service import LoadedScenario, builtin, load_scenario
from bivirus_hoi.domain.equilibria import enumerate_equilibria
from bivirus_hoi.domain.model_core import BivirusModel, State, VirusParams
from bivirus_hoi.schemas.equilibrium import EquilibriumCatalog


def _ring(n: int) -> np.ndarray:
    return np.eye(n) + np.roll(np.eye(n), -1, axis=1)


@pytest.fixture(scope="session")
def example1_scenario() -> LoadedScenario:
    return load_scenario(builtin("example1"))


@pytest.fixture(scope="session")
def example2_scenario() -> LoadedScenario:
    return load_scenario(builtin("example2"))


@pytest.fixture(scope="session")
def example1(example1_scenario) -> BivirusModel:
    return example1_scenario.model


@pytest.fixture(scope="session")
def example2(example2_scenario) -> BivirusModel:
    return example2_scenario.model


@pytest.fixture(scope="session")
def classic() -> BivirusModel:
    """Two nodes, no higher-order spreading, each virus strong on its own node"""
    v1 = VirusParams(delta=[1.0, 1.0], beta_pair=1.0, beta_hoi=0.0, a=[[4.0, 0.1], [0.1, 0.2]])
    v2 = VirusParams(delta=[1.0, 1.0], beta_pair=1.0, beta_hoi=0.0, a=[[0.2, 0.1], [0.1, 4.0]])
    return BivirusModel(virus=(v1, v2))


@pytest.fixture(scope="session")
def subcritical() -> BivirusModel:
    """Pairwise only, rho(beta D^-1 A) = 0.8 for both viruses"""
    a = _ring(4)
    v = VirusParams(delta=np.ones(4), beta_pair=0.4, beta_hoi=0.0, a=a)
    w = VirusParams(delta=np.ones(4), beta_pair=0.4, beta_hoi=0.0, a=a.T)
    return BivirusModel(virus=(v, w))


@pytest.fixture(scope="session")
def example1_catalog(example1) -> EquilibriumCatalog:
    return enumerate_equilibria(example1)


@pytest.fixture(scope="session")
def example2_catalog(example2) -> EquilibriumCatalog:
    return enumerate_equilibria(example2)


@pytest.fixture(scope="session")
def classic_catalog(classic) -> EquilibriumCatalog:
    return enumerate_equilibria(classic)


def _random_virus(rng: np.random.Generator, n: int) -> VirusParams:
    a = rng.uniform(0.0, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < 0.5)
    a += np.roll(np.eye(n), 1, axis=1)
    b = rng.uniform(0.0, 1.0, size=(n, n, n)) * (rng.uniform(size=(n, n, n)) < 0.2)
    return VirusParams(
        delta=rng.uniform(0.5, 2.0, size=n),
        beta_pair=float(rng.uniform(0.1, 2.0)),
        beta_hoi=float(rng.uniform(0.0, 3.0)),
        a=a,
        b=b,
    )


@pytest.fixture
def random_model() -> Callable[[np.random.Generator, int], BivirusModel]:
    """Factory for models satisfying every assumption (a contains a directed cycle)"""
    def build(rng: np.random.Generator, n: int) -> BivirusModel:
        return BivirusModel(virus=(_random_virus(rng, n), _random_virus(rng, n)))
    return build


@pytest.fixture
def random_interior_state() -> Callable[[np.random.Generator, int], State]:
    def draw(rng: np.random.Generator, n: int) -> State:
        x1 = rng.uniform(0.01, 0.98, size=n)
        x2 = rng.uniform(0.0, 1.0, size=n) * (0.99 - x1)
        return State(x1, np.maximum(x2, 1e-3))
    return draw
