"""Application service running simulations, enumerations, condition reports and censuses on one scenario."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from bivirus_hoi.domain.conditions import (
    boundary_self_certificate,
    check_boundary_existence,
    check_boundary_instability,
    check_coexistence_hypotheses,
    check_dfe_global,
    check_dfe_local,
    check_dfe_unique_classic,
    check_tristability,
)
from bivirus_hoi.domain.dynamics import (
    Trajectory,
    convergence_census,
    detect_convergence,
    integrate,
    sample_initial_conditions,
    trajectory_report,
)
from bivirus_hoi.domain.equilibria import enumerate_equilibria
from bivirus_hoi.domain.model_core import State, in_domain
from bivirus_hoi.exceptions import DimensionMismatchError, DomainError
from bivirus_hoi.application.scenario_service import LoadedScenario
from bivirus_hoi.schemas.equilibrium import (
    ConditionReport,
    ConditionsSummary,
    EquilibriumCatalog,
    EquilibriumKind,
)
from bivirus_hoi.schemas.simulation import CensusSummary, InitialKind, TrajectoryReport
from bivirus_hoi.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class InitialCondition:
    """Where a simulation starts: explicit fractions, a seeded random draw, or eps near the DFE"""
    kind: InitialKind
    seed: int = 0
    eps: float = 1e-3
    x1: Optional[Sequence[float]] = None
    x2: Optional[Sequence[float]] = None

    def resolve(self, n: int) -> State:
        if self.kind == InitialKind.RANDOM:
            return sample_initial_conditions(n, 1, self.seed)[0]
        if self.kind == InitialKind.NEAR_DFE:
            state = State(np.full(n, self.eps), np.full(n, self.eps))
        else:
            if self.x1 is None or self.x2 is None:
                raise DomainError("explicit initial condition needs both x1 and x2")
            state = State(self.x1, self.x2)
        if state.n != n:
            raise DimensionMismatchError(n, state.n, what="initial state")
        if not in_domain(state, tol=0.0):
            raise DomainError(
                "initial state is outside D: need x1 >= 0, x2 >= 0 and x1 + x2 <= 1 on every node"
            )
        return state


class ScenarioAnalysisService:
    """Runs every analysis on one loaded scenario; the equilibrium catalog is computed once"""

    def __init__(self, scenario: LoadedScenario, budget: Optional[int] = None):
        self.scenario = scenario
        self.model = scenario.model
        self.budget = budget
        self._catalog: Optional[EquilibriumCatalog] = None

    @property
    def catalog(self) -> EquilibriumCatalog:
        if self._catalog is None:
            self._catalog = enumerate_equilibria(
                self.model, self.budget, rng_seed=self.scenario.simulation.rng_seed
            )
        return self._catalog

    def simulate(
        self,
        initial: InitialCondition,
        t_max: Optional[float] = None,
    ) -> Tuple[Trajectory, TrajectoryReport]:
        """Integrate one trajectory and match its limit against the catalog"""
        sim = self.scenario.simulation
        s0 = initial.resolve(self.model.n)
        traj = integrate(self.model, s0, t_max=t_max or sim.t_max, rtol=sim.rtol, atol=sim.atol)
        verdict = detect_convergence(traj, self.model, records=self.catalog.records)
        report = trajectory_report(traj, verdict)
        logger.info(f"Simulation from {initial.kind.value}: {report.headline()}")
        return traj, report

    def equilibria(self) -> EquilibriumCatalog:
        return self.catalog

    def conditions(self) -> ConditionsSummary:
        """Every condition checker on the scenario, with the coexistence regime"""
        m = self.model
        records = self.catalog.records
        reports: List[ConditionReport] = [
            check_dfe_local(m),
            check_dfe_global(m),
            check_dfe_unique_classic(m),
            check_tristability(m),
            check_boundary_existence(m),
        ]

        firsts = [r for r in records if r.kind == EquilibriumKind.BOUNDARY_V1]
        seconds = [r for r in records if r.kind == EquilibriumKind.BOUNDARY_V2]
        instability = check_boundary_instability(
            m,
            firsts[0].x1 if firsts else None,
            seconds[0].x2 if seconds else None,
        )
        certificates = []
        for record in firsts + seconds:
            k = 0 if record.kind == EquilibriumKind.BOUNDARY_V1 else 1
            check = boundary_self_certificate(m.virus[k], record.x1 if k == 0 else record.x2)
            certificates.append(check.model_copy(update={"name": f"{record.label}.self_certificate"}))
        instability.checks.extend(certificates)
        reports.append(instability)

        coexistence = check_coexistence_hypotheses(m, records)
        reports.append(coexistence)
        return ConditionsSummary(scenario=self.scenario.name, reports=reports, regime=coexistence.regime)

    def census(
        self,
        count: Optional[int] = None,
        seed: Optional[int] = None,
        t_max: Optional[float] = None,
    ) -> CensusSummary:
        sim = self.scenario.simulation
        return convergence_census(
            self.model,
            sim.census_count if count is None else count,
            sim.rng_seed if seed is None else seed,
            t_max or sim.t_max,
            records=self.catalog.records,
        )
