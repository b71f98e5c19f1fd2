from pydantic import BaseModel, Field
from typing import Optional, Dict, List
from enum import Enum

from bivirus_hoi.schemas.equilibrium import EquilibriumKind


class TerminalVerdict(str, Enum):
    """Enum for how a trajectory ended"""
    CONVERGED = "converged"
    MAX_TIME_REACHED = "max_time_reached"
    LEFT_DOMAIN = "left_domain"
    STEP_SIZE_UNDERFLOW = "step_size_underflow"


class InitialKind(str, Enum):
    """Enum for initial condition sources of a simulation"""
    RANDOM = "random"
    NEAR_DFE = "near-dfe"
    EXPLICIT = "explicit"


class TrajectoryReport(BaseModel):
    """Schema for the terminal report of one simulation"""
    verdict: TerminalVerdict = Field(..., description="converged, max_time_reached, left_domain or step_size_underflow")
    matched_label: Optional[str] = Field(None, description="Label of the matched known equilibrium")
    matched_kind: Optional[EquilibriumKind] = Field(None, description="Class of the limit equilibrium")
    terminal_distance: Optional[float] = Field(None, description="Infinity distance from final state to the limit")
    t_final: float = Field(..., ge=0, description="Time of the last recorded state")
    samples: int = Field(..., ge=1, description="Recorded states")
    steps_accepted: int = Field(..., ge=0)
    steps_rejected: int = Field(..., ge=0)
    final_x1: List[float] = Field(..., description="Virus 1 fractions at t_final")
    final_x2: List[float] = Field(..., description="Virus 2 fractions at t_final")
    max_domain_excess: float = Field(0.0, ge=0, description="Largest drift out of D clamped by the guard")

    def headline(self) -> str:
        if self.verdict == TerminalVerdict.CONVERGED:
            if self.matched_label:
                return f"converged: {self.matched_label}"
            kind = self.matched_kind.value if self.matched_kind else "unclassified"
            return f"converged: unmatched {kind}"
        return self.verdict.value


class CensusRun(BaseModel):
    """Schema for one census trajectory"""
    run_id: int = Field(..., ge=0, description="Trajectory index")
    seed: int = Field(..., ge=0, description="Base seed of the census")
    verdict: TerminalVerdict
    matched_kind: Optional[EquilibriumKind] = None
    matched_label: Optional[str] = None
    terminal_distance: Optional[float] = None
    t_final: float = Field(..., ge=0)


class CensusSummary(BaseModel):
    """Schema for a convergence census"""
    count: int = Field(..., ge=0, description="Trajectories run")
    seed: int = Field(..., ge=0, description="Base seed")
    t_max: float = Field(..., gt=0)
    converged: int = Field(0, ge=0)
    fraction_converged: float = Field(0.0, ge=0, le=1)
    histogram: Dict[str, int] = Field(default_factory=dict, description="Runs per matched equilibrium label")
    kind_histogram: Dict[str, int] = Field(default_factory=dict, description="Runs per equilibrium class")
    unconverged_runs: List[int] = Field(default_factory=list, description="Ids of runs without a verdict of convergence")
    runs: List[CensusRun] = Field(default_factory=list)
