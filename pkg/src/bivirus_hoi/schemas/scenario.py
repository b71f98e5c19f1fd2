from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Optional, List, Tuple

from bivirus_hoi.config import settings


class Hyperedge(BaseModel):
    """Schema for one higher-order contagion entry b[head][j][l] = weight (1-based)"""
    model_config = ConfigDict(extra="forbid")

    head: int = Field(..., description="Node receiving the infection")
    pair: Tuple[int, int] = Field(..., description="Nodes (j, l) infecting together")
    weight: float = Field(1.0, description="Tensor entry value")


class VirusConfig(BaseModel):
    """Schema for the parameters of one virus"""
    model_config = ConfigDict(extra="forbid")

    delta: List[float] = Field(..., description="Healing rate per node")
    beta_pair: float = Field(..., ge=0, description="Pairwise infection rate")
    beta_hoi: float = Field(0.0, ge=0, description="Higher-order infection rate")
    a: List[List[float]] = Field(..., description="n x n pairwise interaction matrix")
    hyperedges: List[Hyperedge] = Field(default_factory=list, description="Nonzero entries of the HOI tensor")


class SimulationSettings(BaseModel):
    """Schema for the optional simulation block; defaults come from Settings"""
    model_config = ConfigDict(extra="forbid")

    t_max: float = Field(default_factory=lambda: settings.t_max, gt=0)
    rtol: float = Field(default_factory=lambda: settings.rtol, gt=0)
    atol: float = Field(default_factory=lambda: settings.atol, gt=0)
    rng_seed: int = Field(0, ge=0, description="Base seed for random initial conditions")
    census_count: int = Field(100, ge=0, description="Trajectories in a census")


class ScenarioConfig(BaseModel):
    """Schema for a scenario file: two viruses over n nodes with 1-based hyperedge indices"""
    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = Field(None, description="Scenario name")
    description: Optional[str] = Field(None, description="Free text")
    n: int = Field(..., ge=1, description="Number of nodes")
    viruses: List[VirusConfig] = Field(..., min_length=2, max_length=2)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)

    @model_validator(mode="after")
    def validate_dimensions(self) -> "ScenarioConfig":
        issues = self.dimension_issues()
        if issues:
            raise ValueError("\n".join(issues))
        return self

    def dimension_issues(self) -> List[str]:
        """Every shape and index problem, one message each"""
        n = self.n
        issues: List[str] = []
        for k, virus in enumerate(self.viruses):
            where = f"viruses[{k}]"
            if len(virus.delta) != n:
                issues.append(f"{where}.delta: length {len(virus.delta)}, expected {n}")
            if len(virus.a) != n:
                issues.append(f"{where}.a: {len(virus.a)} rows, expected {n}")
            for r, row in enumerate(virus.a):
                if len(row) != n:
                    issues.append(f"{where}.a[{r}]: length {len(row)}, expected {n}")
            seen = {}
            for h, edge in enumerate(virus.hyperedges):
                entry = f"{where}.hyperedges[{h}]"
                for role, index in (("head", edge.head), ("pair[0]", edge.pair[0]), ("pair[1]", edge.pair[1])):
                    if not 1 <= index <= n:
                        issues.append(f"{entry}: {role} {index} out of range [1, {n}]")
                key = (edge.head, *edge.pair)
                if key in seen:
                    issues.append(f"{entry}: duplicates hyperedges[{seen[key]}] {key}")
                else:
                    seen[key] = h
        return issues

    def hyperedge_count(self, k: int) -> int:
        return len(self.viruses[k - 1].hyperedges)

    def to_model(self):
        """Dense model with 0-based tensor indices"""
        import numpy as np

        from bivirus_hoi.domain.model_core import BivirusModel, VirusParams

        params = []
        for virus in self.viruses:
            b = np.zeros((self.n, self.n, self.n))
            for edge in virus.hyperedges:
                b[edge.head - 1, edge.pair[0] - 1, edge.pair[1] - 1] = edge.weight
            params.append(VirusParams(
                delta=virus.delta,
                beta_pair=virus.beta_pair,
                beta_hoi=virus.beta_hoi,
                a=virus.a,
                b=b,
            ))
        return BivirusModel(virus=tuple(params))
