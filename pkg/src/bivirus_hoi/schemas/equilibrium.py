from pydantic import BaseModel, Field
from typing import Optional, Dict, Any, List
from enum import Enum


class EquilibriumKind(str, Enum):
    """Enum for equilibrium classes"""
    DFE = "DFE"
    BOUNDARY_V1 = "boundary_v1"
    BOUNDARY_V2 = "boundary_v2"
    COEXISTENCE = "coexistence"


class Stability(str, Enum):
    """Enum for local stability verdicts"""
    STABLE = "locally_exponentially_stable"
    UNSTABLE = "unstable"
    NEUTRAL = "neutral"


class CoexistenceRegime(str, Enum):
    """Enum for regimes guaranteeing a coexistence equilibrium"""
    MUTUAL_INVASION = "mutual_invasion"
    BISTABLE_ENDEMIC = "bistable_endemic"
    TRISTABLE = "tristable"


class EquilibriumRecord(BaseModel):
    """Schema for one classified equilibrium"""
    label: str = Field("", description="Unique label within a catalog, e.g. boundary_v1 or coexistence#2")
    kind: EquilibriumKind = Field(..., description="DFE, boundary_v1, boundary_v2 or coexistence")
    x1: List[float] = Field(..., description="Virus 1 infected fractions")
    x2: List[float] = Field(..., description="Virus 2 infected fractions")
    s_jacobian: float = Field(..., description="Spectral abscissa of the full Jacobian")
    stability: Stability = Field(..., description="Verdict from s_jacobian and the zero band")
    det_jacobian: float = Field(..., description="Determinant of the full Jacobian (LU)")
    nondegenerate: bool = Field(..., description="|det J| above the singularity threshold")
    residual: float = Field(..., ge=0, description="Infinity norm of the vector field at the point")
    saturated: bool = Field(..., description="Off-virus block has no eigenvalue with positive real part")
    strictly_saturated: bool = Field(..., description="Off-virus block is Hurwitz")
    off_block_abscissa: Optional[float] = Field(None, description="Spectral abscissa of the block of the extinct virus")

    @property
    def point(self):
        from bivirus_hoi.domain.model_core import State
        return State(self.x1, self.x2)


class EquilibriumCatalog(BaseModel):
    """Schema for the result of an equilibrium enumeration"""
    records: List[EquilibriumRecord] = Field(default_factory=list, description="DFE, boundary and coexistence records")
    solver_runs: int = Field(0, ge=0, description="Solver runs spent")
    budget: int = Field(..., ge=1, description="Maximum solver runs allowed")
    budget_exhausted: bool = Field(False, description="Seeds were left unexplored")
    warnings: List[str] = Field(default_factory=list, description="Degeneracy and dropped-candidate warnings")

    def of_kind(self, kind: EquilibriumKind) -> List[EquilibriumRecord]:
        return [r for r in self.records if r.kind == kind]

    def by_label(self, label: str) -> EquilibriumRecord:
        for record in self.records:
            if record.label == label:
                return record
        raise KeyError(label)


class ConditionCheck(BaseModel):
    """Schema for one evaluated condition and the scalars that decided it"""
    name: str = Field(..., description="Condition name, e.g. virus_1.spectral_radius")
    holds: Optional[bool] = Field(..., description="None when the condition is not applicable")
    evidence: Dict[str, Any] = Field(default_factory=dict, description="Scalars deciding the condition")
    note: Optional[str] = Field(None, description="Human readable remark")


class ConditionReport(BaseModel):
    """Schema for a named group of condition checks"""
    name: str = Field(..., description="Checker name")
    holds: Optional[bool] = Field(..., description="Conclusion of the checker")
    checks: List[ConditionCheck] = Field(default_factory=list)
    regime: Optional[CoexistenceRegime] = Field(None, description="Coexistence regime, when determined")
    claim: Optional[str] = Field(None, description="Claim implied by the regime")
    claim_verified: Optional[bool] = Field(None, description="Claim checked against computed equilibria")

    def check(self, name: str) -> ConditionCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)


class ConditionsSummary(BaseModel):
    """Schema for the consolidated condition report of a scenario"""
    scenario: Optional[str] = Field(None, description="Scenario name")
    reports: List[ConditionReport] = Field(default_factory=list)
    regime: Optional[CoexistenceRegime] = Field(None, description="Applicable coexistence regime")

    def report(self, name: str) -> ConditionReport:
        for item in self.reports:
            if item.name == name:
                return item
        raise KeyError(name)
