"""CSV writers and readers for trajectories and census runs."""
import csv
from typing import IO, List, Tuple

import numpy as np

from bivirus_hoi.domain.dynamics import Trajectory
from bivirus_hoi.schemas.simulation import CensusSummary

CENSUS_COLUMNS = ["run_id", "seed", "verdict", "matched_kind", "matched_label", "terminal_distance"]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def trajectory_header(n: int) -> List[str]:
    return ["t"] + [f"x1_{i}" for i in range(1, n + 1)] + [f"x2_{i}" for i in range(1, n + 1)]


def write_trajectory_csv(traj: Trajectory, handle: IO[str]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(trajectory_header(traj.n))
    for t, x1, x2 in zip(traj.times, traj.x1, traj.x2):
        writer.writerow([_fmt(t)] + [_fmt(v) for v in x1] + [_fmt(v) for v in x2])


def read_trajectory_csv(handle: IO[str]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(times, x1, x2)`` with one row per sample"""
    reader = csv.reader(handle)
    header = next(reader)
    n = (len(header) - 1) // 2
    if header != trajectory_header(n):
        raise ValueError(f"unexpected trajectory header: {','.join(header)}")
    rows = np.array([[float(v) for v in row] for row in reader if row], dtype=np.float64)
    rows = rows.reshape(-1, 2 * n + 1)
    return rows[:, 0], rows[:, 1:n + 1], rows[:, n + 1:]


def write_census_csv(summary: CensusSummary, handle: IO[str]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(CENSUS_COLUMNS)
    for run in summary.runs:
        writer.writerow([
            run.run_id,
            run.seed,
            run.verdict.value,
            run.matched_kind.value if run.matched_kind else "",
            run.matched_label or "",
            "" if run.terminal_distance is None else _fmt(run.terminal_distance),
        ])
