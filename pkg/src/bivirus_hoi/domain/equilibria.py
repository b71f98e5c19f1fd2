"""Equilibrium finders and classification.

Boundary equilibria come from a damped fixed-point iteration on the
single-virus reduction, finished by Newton. Coexistence equilibria come from
a damped 2n-dimensional Newton iteration kept inside int(D). Every found
point is classified into an ``EquilibriumRecord``.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from bivirus_hoi.config import settings
from bivirus_hoi.domain.model_core import (
    BivirusModel,
    State,
    VirusParams,
    infection_pressure,
    jacobian,
    satisfies_zero_or_interior,
    single_virus_field,
    single_virus_jacobian,
    stacked_field,
    stacked_jacobian,
)
from bivirus_hoi.domain.spectral import perron_vector, spectral_abscissa
from bivirus_hoi.exceptions import DimensionMismatchError, DomainError, EquilibriumNotFoundError
from bivirus_hoi.schemas.equilibrium import (
    EquilibriumCatalog,
    EquilibriumKind,
    EquilibriumRecord,
    Stability,
)
from bivirus_hoi.utils.logging import RunContext, get_logger, log_with_context

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]


class SolveStatus(str, Enum):
    """Enum for single-virus solver outcomes"""
    CONVERGED = "converged"
    CONVERGED_TO_DFE = "converged_to_dfe"
    DIVERGED = "diverged"


class FixedPointScheme(str, Enum):
    """Enum for the single-virus fixed-point map.

    MONOTONE iterates x <- g / (delta + g) with g the infection pressure; it
    stays inside [0, 1) without clamping. DIRECT iterates the clamped map
    x <- (1 - x) g / delta; it needs a damping well below the default 0.5
    and oscillates without settling on models with large higher-order rates,
    where it reports DIVERGED.
    """
    MONOTONE = "monotone"
    DIRECT = "direct"


@dataclass(frozen=True, eq=False)
class SingleVirusSolution:
    status: SolveStatus
    x: FloatArray
    residual: float
    iterations: int
    newton_steps: int = 0

    @property
    def converged(self) -> bool:
        return self.status == SolveStatus.CONVERGED


def _norm(vec: FloatArray) -> float:
    return float(np.max(np.abs(vec))) if vec.size else 0.0


def damped_newton(
    field: Callable[[FloatArray], FloatArray],
    jac: Callable[[FloatArray], FloatArray],
    x0: FloatArray,
    feasible: Callable[[FloatArray], bool],
    tol: float,
    max_iter: int,
) -> Tuple[Optional[FloatArray], float, int]:
    """Newton with backtracking on the Euclidean residual, restricted to ``feasible``.

    Returns ``(x, residual, steps)``; ``x`` is None when a step fails.
    """
    x = np.array(x0, dtype=np.float64)
    f = field(x)
    residual = _norm(f)
    merit = float(np.linalg.norm(f))
    for step in range(max_iter):
        if residual <= tol:
            return x, residual, step
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                direction = scipy.linalg.solve(jac(x), -f)
        except (scipy.linalg.LinAlgError, ValueError):
            return None, residual, step
        alpha = 1.0
        while alpha >= 1e-10:
            candidate = x + alpha * direction
            if feasible(candidate):
                f_candidate = field(candidate)
                merit_candidate = float(np.linalg.norm(f_candidate))
                if merit_candidate <= (1.0 - 1e-4 * alpha) * merit or _norm(f_candidate) <= tol:
                    break
            alpha *= 0.5
        else:
            return None, residual, step
        x, f, merit = candidate, f_candidate, merit_candidate
        residual = _norm(f)
    if residual <= tol:
        return x, residual, max_iter
    return None, residual, max_iter


def find_single_virus_equilibrium(
    v: VirusParams,
    seed: Sequence[float],
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
    *,
    scheme: FixedPointScheme = FixedPointScheme.MONOTONE,
    damping: Optional[float] = None,
    clamp: Optional[float] = None,
    newton_switch: Optional[float] = None,
) -> SingleVirusSolution:
    """Endemic equilibrium of one virus reached from ``seed``.

    Exit to the zero vector is reported as CONVERGED_TO_DFE; running out of
    iterations is reported as DIVERGED with the last iterate.
    """
    max_iter = settings.fixed_point_max_iter if max_iter is None else max_iter
    tol = settings.residual_tol if tol is None else tol
    damping = settings.fixed_point_damping if damping is None else damping
    clamp = settings.fixed_point_clamp if clamp is None else clamp
    newton_switch = settings.newton_switch if newton_switch is None else newton_switch

    x = np.array(seed, dtype=np.float64)
    if x.shape != (v.n,):
        raise DimensionMismatchError(v.n, x.shape[0] if x.ndim else 0, what="seed")
    if not (np.all(x > 0) and np.all(x < 1)):
        raise DomainError("seed must lie in (0, 1)^n")

    def feasible(candidate: FloatArray) -> bool:
        return bool(np.all(candidate >= 0) and np.all(candidate <= 1 - clamp))

    newton_steps = 0
    newton_retry_below = newton_switch
    residual = _norm(single_virus_field(v, x))
    for iteration in range(1, max_iter + 1):
        if np.max(x) <= clamp:
            return SingleVirusSolution(SolveStatus.CONVERGED_TO_DFE, np.zeros(v.n), 0.0, iteration, newton_steps)
        if residual <= tol:
            break
        if residual < newton_retry_below:
            polished, polished_residual, steps = damped_newton(
                lambda y: single_virus_field(v, y),
                lambda y: single_virus_jacobian(v, y),
                x, feasible, tol, settings.newton_max_iter,
            )
            newton_steps += steps
            if polished is not None:
                x, residual = polished, polished_residual
                break
            newton_retry_below = residual / 2

        pressure = infection_pressure(v, x)
        if scheme == FixedPointScheme.MONOTONE:
            target = pressure / (v.delta + pressure)
        else:
            target = np.clip((1.0 - x) * pressure / v.delta, 0.0, 1.0 - clamp)
        x = (1.0 - damping) * x + damping * target
        residual = _norm(single_virus_field(v, x))
    else:
        logger.debug(f"Single-virus iteration diverged: residual {residual:.3e} after {max_iter} iterations")
        return SingleVirusSolution(SolveStatus.DIVERGED, x, residual, max_iter, newton_steps)

    if np.max(x) < settings.zero_snap:
        return SingleVirusSolution(SolveStatus.CONVERGED_TO_DFE, np.zeros(v.n), 0.0, iteration, newton_steps)
    x.setflags(write=False)
    return SingleVirusSolution(SolveStatus.CONVERGED, x, residual, iteration, newton_steps)


def newton_single_virus_equilibrium(
    v: VirusParams,
    seed: Sequence[float],
    tol: Optional[float] = None,
    *,
    clamp: Optional[float] = None,
) -> SingleVirusSolution:
    """Single-virus equilibrium reached by damped Newton alone from ``seed``.

    Unlike the fixed-point map this also lands on unstable endemic
    equilibria. A failed Newton run is reported as DIVERGED.
    """
    tol = settings.residual_tol if tol is None else tol
    clamp = settings.fixed_point_clamp if clamp is None else clamp
    x0 = np.array(seed, dtype=np.float64)
    if x0.shape != (v.n,):
        raise DimensionMismatchError(v.n, x0.shape[0] if x0.ndim else 0, what="seed")
    if not (np.all(x0 > 0) and np.all(x0 < 1)):
        raise DomainError("seed must lie in (0, 1)^n")

    x, residual, steps = damped_newton(
        lambda y: single_virus_field(v, y),
        lambda y: single_virus_jacobian(v, y),
        x0, lambda y: bool(np.all(y >= 0) and np.all(y <= 1 - clamp)), tol, settings.newton_max_iter,
    )
    if x is None:
        return SingleVirusSolution(SolveStatus.DIVERGED, x0, residual, 0, steps)
    if np.max(x) < settings.zero_snap:
        return SingleVirusSolution(SolveStatus.CONVERGED_TO_DFE, np.zeros(v.n), 0.0, 0, steps)
    x.setflags(write=False)
    return SingleVirusSolution(SolveStatus.CONVERGED, x, residual, 0, steps)


def require_single_virus_equilibrium(v: VirusParams, seed: Sequence[float], **kwargs) -> FloatArray:
    """As ``find_single_virus_equilibrium`` but raising on divergence"""
    solution = find_single_virus_equilibrium(v, seed, **kwargs)
    if solution.status == SolveStatus.DIVERGED:
        raise EquilibriumNotFoundError(
            "single-virus iteration did not converge", solution.x, solution.residual, solution.iterations
        )
    return solution.x


def _determinant(mat: FloatArray) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(mat)
    swaps = int(np.count_nonzero(piv != np.arange(piv.shape[0])))
    return float(np.prod(np.diag(lu)) * (-1.0) ** swaps)


def _stability(abscissa: float, band: float) -> Stability:
    if abscissa < -band:
        return Stability.STABLE
    if abscissa > band:
        return Stability.UNSTABLE
    return Stability.NEUTRAL


def classify_equilibrium(
    m: BivirusModel,
    s: State,
    *,
    band: Optional[float] = None,
    det_threshold: Optional[float] = None,
    label: str = "",
) -> EquilibriumRecord:
    """Kind, stability, nondegeneracy and saturation of an equilibrium.

    The kind is read from exact zeros: snap components first (``polish_equilibrium``).
    """
    band = settings.zero_band if band is None else band
    det_threshold = settings.det_threshold if det_threshold is None else det_threshold
    n = m.n

    virus1_extinct = not np.any(s.x1)
    virus2_extinct = not np.any(s.x2)
    if virus1_extinct and virus2_extinct:
        kind = EquilibriumKind.DFE
    elif virus2_extinct:
        kind = EquilibriumKind.BOUNDARY_V1
    elif virus1_extinct:
        kind = EquilibriumKind.BOUNDARY_V2
    else:
        kind = EquilibriumKind.COEXISTENCE

    jac = jacobian(m, s)
    s_jacobian = spectral_abscissa(jac)
    det = _determinant(jac)
    residual = _norm(stacked_field(m, s.as_vector()))

    if kind == EquilibriumKind.DFE:
        off_block = s_jacobian
    elif kind == EquilibriumKind.BOUNDARY_V1:
        off_block = spectral_abscissa(jac[n:, n:])
    elif kind == EquilibriumKind.BOUNDARY_V2:
        off_block = spectral_abscissa(jac[:n, :n])
    else:
        off_block = None

    return EquilibriumRecord(
        label=label or kind.value,
        kind=kind,
        x1=s.x1.tolist(),
        x2=s.x2.tolist(),
        s_jacobian=s_jacobian,
        stability=_stability(s_jacobian, band),
        det_jacobian=det,
        nondegenerate=abs(det) > det_threshold,
        residual=residual,
        saturated=off_block is None or off_block <= band,
        strictly_saturated=off_block is None or off_block < -band,
        off_block_abscissa=off_block,
    )


def polish_equilibrium(m: BivirusModel, s: State, tol: Optional[float] = None) -> State:
    """Snap near-zero virus components and refine with Newton.

    With one virus snapped the reduced single-virus Newton runs; with both
    snapped the DFE is returned; otherwise the full Newton on closed D.
    """
    tol = settings.residual_tol if tol is None else tol
    snap = settings.zero_snap
    n = m.n
    x1 = np.clip(s.x1, 0.0, 1.0)
    x2 = np.clip(s.x2, 0.0, 1.0)
    extinct1 = np.max(x1) < snap
    extinct2 = np.max(x2) < snap

    if extinct1 and extinct2:
        return State.zeros(n)

    if extinct1 or extinct2:
        k = 1 if extinct1 else 0
        v = m.virus[k]
        x = x2 if k else x1
        polished, residual, _ = damped_newton(
            lambda y: single_virus_field(v, y),
            lambda y: single_virus_jacobian(v, y),
            x, lambda y: bool(np.all(y >= 0) and np.all(y < 1)), tol, settings.newton_max_iter,
        )
        if polished is None:
            raise EquilibriumNotFoundError("boundary polish failed", x, residual, settings.newton_max_iter)
        if np.max(polished) < snap:
            return State.zeros(n)
        zeros = np.zeros(n)
        return State(zeros, polished) if k else State(polished, zeros)

    polished, residual, _ = damped_newton(
        lambda y: stacked_field(m, y),
        lambda y: stacked_jacobian(m, y),
        np.concatenate([x1, x2]), _closed_domain(n), tol, settings.newton_max_iter,
    )
    if polished is None:
        raise EquilibriumNotFoundError("coexistence polish failed", np.concatenate([x1, x2]), residual,
                                       settings.newton_max_iter)
    result = State.from_vector(polished)
    if min(np.max(result.x1), np.max(result.x2)) < snap:
        return polish_equilibrium(m, result, tol)
    return result


def _closed_domain(n: int) -> Callable[[FloatArray], bool]:
    def feasible(y: FloatArray) -> bool:
        return bool(np.all(y >= 0) and np.all(y[:n] + y[n:] <= 1))
    return feasible


def _open_domain(n: int) -> Callable[[FloatArray], bool]:
    def feasible(y: FloatArray) -> bool:
        return bool(np.all(y > 0) and np.all(y[:n] + y[n:] < 1))
    return feasible


def _dedup(points: Iterable[FloatArray], tol: float) -> List[FloatArray]:
    """Sort by coordinates, then keep points farther than ``tol`` from every kept one"""
    kept: List[FloatArray] = []
    for point in sorted(points, key=lambda p: tuple(p)):
        if all(_norm(point - other) > tol for other in kept):
            kept.append(point)
    return kept


def _run_pool(func, items: Sequence, max_workers: Optional[int]) -> list:
    workers = settings.max_workers if max_workers is None else max_workers
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def find_coexistence(
    m: BivirusModel,
    seeds: Sequence[State],
    tol: Optional[float] = None,
    *,
    max_workers: Optional[int] = None,
) -> List[EquilibriumRecord]:
    """Coexistence equilibria reached by Newton from interior seeds, deduplicated"""
    tol = settings.residual_tol if tol is None else tol
    n = m.n
    feasible = _open_domain(n)

    def solve(indexed: Tuple[int, State]) -> Optional[FloatArray]:
        index, seed = indexed
        with RunContext(f"coex-{index}"):
            if seed.n != n:
                raise DimensionMismatchError(n, seed.n, what="seed")
            y0 = seed.as_vector()
            if not feasible(y0):
                logger.warning(f"Skipping coexistence seed {index}: not interior")
                return None
            point, residual, steps = damped_newton(
                lambda y: stacked_field(m, y), lambda y: stacked_jacobian(m, y),
                y0, feasible, tol, settings.newton_max_iter,
            )
            log_with_context(logger, "debug", "coexistence Newton finished",
                             converged=point is not None, residual=residual, steps=steps)
            if point is None or min(np.min(point[:n]), np.min(point[n:])) <= settings.zero_snap:
                return None
            return point

    found = [p for p in _run_pool(solve, list(enumerate(seeds)), max_workers) if p is not None]
    points = _dedup(found, settings.dedup_tol)
    records = []
    for index, point in enumerate(points, start=1):
        label = EquilibriumKind.COEXISTENCE.value if index == 1 else f"{EquilibriumKind.COEXISTENCE.value}#{index}"
        records.append(classify_equilibrium(m, State.from_vector(point), label=label))
    logger.info(f"Coexistence search: {len(seeds)} seeds, {len(found)} converged, {len(records)} distinct")
    return records


def boundary_seeds(v: VirusParams, rng: np.random.Generator, count: Optional[int] = None) -> List[FloatArray]:
    """Uniform levels, the Perron vector of ``a`` scaled to 0.5, and random interior points"""
    count = settings.random_boundary_seeds if count is None else count
    n = v.n
    seeds = [np.full(n, level) for level in (0.99, 0.5, 0.25, 0.1, 0.05)]
    perron = np.abs(perron_vector(v.a))
    if np.all(perron > 0):
        seeds.append(0.5 * perron / np.max(perron))
    for _ in range(count):
        seeds.append(rng.uniform(0.01, 0.99, size=n))
    return seeds


def _limit_label(
    m: BivirusModel,
    y0: FloatArray,
    targets: Sequence[Tuple[str, FloatArray]],
    t_end: float,
) -> Optional[str]:
    sol = solve_ivp(lambda t, y: stacked_field(m, y), (0.0, t_end), y0,
                    method="RK45", rtol=1e-8, atol=1e-10)
    final = sol.y[:, -1]
    best = min(targets, key=lambda target: _norm(final - target[1]))
    return best[0] if _norm(final - best[1]) < 1e-3 else None


def basin_boundary_seed(
    m: BivirusModel,
    first: EquilibriumRecord,
    second: EquilibriumRecord,
    targets: Sequence[EquilibriumRecord],
    *,
    t_end: Optional[float] = None,
    bisections: int = 30,
) -> Optional[State]:
    """Interior point near the equilibrium separating the basins of two stable records.

    Bisects the segment between them on the forward limit; the trajectory
    from the final bisection point passes close to the separating saddle.
    """
    t_end = settings.t_max if t_end is None else t_end
    p_first = np.concatenate([first.x1, first.x2])
    p_second = np.concatenate([second.x1, second.x2])
    labelled = [(r.label, np.concatenate([r.x1, r.x2])) for r in targets]

    def point(lam: float) -> FloatArray:
        return lam * p_first + (1.0 - lam) * p_second

    low, high = 0.0, 1.0
    for _ in range(bisections):
        mid = 0.5 * (low + high)
        if _limit_label(m, point(mid), labelled, t_end) == first.label:
            high = mid
        else:
            low = mid

    times = np.linspace(0.0, t_end, 2001)
    sol = solve_ivp(lambda t, y: stacked_field(m, y), (0.0, t_end), point(high),
                    method="RK45", rtol=1e-10, atol=1e-12, t_eval=times)
    norms = [_norm(stacked_field(m, y)) for y in sol.y.T]
    candidate = sol.y[:, int(np.argmin(norms))]
    if not _open_domain(m.n)(candidate):
        return None
    return State.from_vector(candidate)


def coexistence_seeds(
    m: BivirusModel,
    boundaries: Sequence[EquilibriumRecord],
    rng: np.random.Generator,
    count: Optional[int] = None,
) -> List[State]:
    """Convex combinations and a grid between boundary pairs, then random interior points"""
    count = settings.random_coexistence_seeds if count is None else count
    n = m.n
    seeds: List[State] = []
    firsts = [r for r in boundaries if r.kind == EquilibriumKind.BOUNDARY_V1]
    seconds = [r for r in boundaries if r.kind == EquilibriumKind.BOUNDARY_V2]
    for r1, r2 in product(firsts, seconds):
        bar1, bar2 = np.asarray(r1.x1), np.asarray(r2.x2)
        for lam in (0.25, 0.5, 0.75):
            seeds.append(State(lam * bar1, (1.0 - lam) * bar2))
        for a, b in product((0.1, 0.3, 0.5, 0.7, 0.9), repeat=2):
            if np.all(a * bar1 + b * bar2 < 1.0 - 1e-9):
                seeds.append(State(a * bar1, b * bar2))
    for _ in range(count):
        x1, x2 = rng.uniform(0.0, 1.0, size=n), rng.uniform(0.0, 1.0, size=n)
        total = np.max(x1 + x2)
        if total > 0.9:
            x1, x2 = 0.9 * x1 / total, 0.9 * x2 / total
        seeds.append(State(x1, x2))
    return seeds


def _label_records(records: List[EquilibriumRecord]) -> List[EquilibriumRecord]:
    counts = {}
    labelled = []
    for record in records:
        counts[record.kind] = counts.get(record.kind, 0) + 1
        index = counts[record.kind]
        label = record.kind.value if index == 1 else f"{record.kind.value}#{index}"
        labelled.append(record.model_copy(update={"label": label}))
    return labelled


def enumerate_equilibria(
    m: BivirusModel,
    budget: Optional[int] = None,
    *,
    rng_seed: int = 0,
    max_workers: Optional[int] = None,
) -> EquilibriumCatalog:
    """DFE, every distinct boundary equilibrium from the seed set, and coexistence finds.

    ``budget`` caps solver runs; exhaustion is reported on the catalog with
    the partial results.
    """
    budget = settings.enumeration_budget if budget is None else budget
    rng = np.random.default_rng(rng_seed)
    n = m.n
    runs = 0
    exhausted = False
    notes: List[str] = []
    records: List[EquilibriumRecord] = [classify_equilibrium(m, State.zeros(n))]

    boundaries: List[EquilibriumRecord] = []
    for k, v in enumerate(m.virus):
        # fixed point reaches the stable endemic states, Newton also the unstable ones
        tasks = [(seed, scheme) for seed in boundary_seeds(v, rng) for scheme in ("fixed_point", "newton")]
        if runs + len(tasks) > budget:
            tasks = tasks[:max(budget - runs, 0)]
            exhausted = True
        runs += len(tasks)

        def solve(task, v=v):
            seed, scheme = task
            if scheme == "newton":
                return newton_single_virus_equilibrium(v, seed)
            return find_single_virus_equilibrium(v, seed)

        solutions = _run_pool(solve, tasks, max_workers)
        for (_, scheme), solution in zip(tasks, solutions):
            if scheme == "fixed_point" and solution.status == SolveStatus.DIVERGED:
                notes.append(f"virus {k + 1}: boundary iteration diverged (residual {solution.residual:.3e})")
        # most infected first: it takes the unsuffixed label
        distinct = _dedup([s.x for s in solutions if s.converged], settings.dedup_tol)
        for x in sorted(distinct, key=lambda p: -float(np.sum(p))):
            zeros = np.zeros(n)
            state = State(x, zeros) if k == 0 else State(zeros, x)
            boundaries.append(classify_equilibrium(m, state))

    stable_pairs = []
    if not exhausted:
        stable = [r for r in boundaries if r.stability == Stability.STABLE]
        stable_pairs = [
            (r1, r2) for r1, r2 in product(stable, stable)
            if r1.kind == EquilibriumKind.BOUNDARY_V1 and r2.kind == EquilibriumKind.BOUNDARY_V2
        ]

    seeds = coexistence_seeds(m, boundaries, rng)
    if stable_pairs:
        targets = _label_records(records + boundaries)
        by_point = {tuple(r.x1 + r.x2): r for r in targets}
        for r1, r2 in stable_pairs:
            first, second = by_point[tuple(r1.x1 + r1.x2)], by_point[tuple(r2.x1 + r2.x2)]
            seed = basin_boundary_seed(m, first, second, targets)
            if seed is not None:
                seeds.insert(0, seed)
    if runs + len(seeds) > budget:
        seeds = seeds[:max(budget - runs, 0)]
        exhausted = True
    runs += len(seeds)
    coexistence = find_coexistence(m, seeds, max_workers=max_workers)
    kinds = {r.kind for r in boundaries}
    if not coexistence and {EquilibriumKind.BOUNDARY_V1, EquilibriumKind.BOUNDARY_V2} <= kinds:
        notes.append(f"no coexistence equilibrium found from {len(seeds)} seeds")

    catalog_records = []
    for record in records + boundaries + coexistence:
        if record.residual > settings.record_residual_max:
            notes.append(f"dropped {record.kind.value} candidate: residual {record.residual:.3e}")
            continue
        if not satisfies_zero_or_interior(record.point):
            notes.append(f"dropped {record.kind.value} candidate: component neither zero nor interior")
            continue
        if not record.nondegenerate:
            notes.append(f"degenerate {record.kind.value} equilibrium: |det J| = {abs(record.det_jacobian):.3e}")
        catalog_records.append(record)

    if exhausted:
        notes.append(f"solver budget {budget} exhausted; results are partial")
    for note in notes:
        logger.warning(note)

    catalog = EquilibriumCatalog(
        records=_label_records(catalog_records),
        solver_runs=runs,
        budget=budget,
        budget_exhausted=exhausted,
        warnings=notes,
    )
    logger.info(
        f"Enumerated {len(catalog.records)} equilibria "
        f"({', '.join(r.label for r in catalog.records)}) in {runs} solver runs"
    )
    return catalog


def match_record(
    record: EquilibriumRecord,
    known: Sequence[EquilibriumRecord],
    tol: Optional[float] = None,
) -> Optional[EquilibriumRecord]:
    """Known record of the same kind within ``tol`` (infinity norm), nearest first"""
    tol = settings.match_tol if tol is None else tol
    point = record.point
    best = None
    best_distance = tol
    for candidate in known:
        if candidate.kind != record.kind:
            continue
        distance = point.distance(candidate.point)
        if distance <= best_distance:
            best, best_distance = candidate, distance
    return best
