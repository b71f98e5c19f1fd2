"""Trajectories of the bivirus flow, convergence detection and randomized experiments.

Integration uses the scipy ``RK45`` stepper one accepted step at a time so
that every step passes the domain guard before it is recorded.
"""
from __future__ import annotations

from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import RK45

from bivirus_hoi.config import settings
from bivirus_hoi.domain.equilibria import classify_equilibrium, enumerate_equilibria, match_record, polish_equilibrium
from bivirus_hoi.domain.model_core import BivirusModel, State, in_domain, stacked_field
from bivirus_hoi.exceptions import (
    DimensionMismatchError,
    DomainError,
    EquilibriumNotFoundError,
    IntegrationError,
    LeftDomainError,
    OrderViolationError,
    StepSizeUnderflowError,
)
from bivirus_hoi.schemas.equilibrium import EquilibriumRecord
from bivirus_hoi.schemas.simulation import CensusRun, CensusSummary, TerminalVerdict, TrajectoryReport
from bivirus_hoi.utils.logging import RunContext, get_logger, log_with_context

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]


@dataclass(eq=False)
class Trajectory:
    """Recorded states of one integration; rows of ``x1``/``x2`` follow ``times``"""

    times: FloatArray
    x1: FloatArray
    x2: FloatArray
    steps_accepted: int
    steps_rejected: int
    terminal_verdict: TerminalVerdict
    rtol: float
    atol: float
    max_domain_excess: float = 0.0

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def n(self) -> int:
        return self.x1.shape[1]

    def state(self, index: int) -> State:
        return State(self.x1[index], self.x2[index])

    @property
    def states(self) -> List[State]:
        return [self.state(i) for i in range(len(self))]

    @property
    def final_state(self) -> State:
        return self.state(-1)


@dataclass(frozen=True, eq=False)
class ConvergenceVerdict:
    status: TerminalVerdict
    limit: Optional[State] = None
    record: Optional[EquilibriumRecord] = None
    matched_label: Optional[str] = None
    terminal_distance: Optional[float] = None

    @property
    def converged(self) -> bool:
        return self.status == TerminalVerdict.CONVERGED


@dataclass(frozen=True, eq=False)
class OrderedPair:
    """Interior states with x1 of ``a`` above ``b`` and x2 of ``a`` below ``b`` (strict cone order)"""

    a: State
    b: State

    def __post_init__(self):
        if self.a.n != self.b.n:
            raise DimensionMismatchError(self.a.n, self.b.n, what="second state")
        for name, s in (("a", self.a), ("b", self.b)):
            if not (np.all(s.x1 > 0) and np.all(s.x2 > 0) and np.all(s.x1 + s.x2 < 1)):
                raise DomainError(f"state {name} of an ordered pair must be interior")
        x1_ordered = np.all(self.a.x1 >= self.b.x1) and np.any(self.a.x1 > self.b.x1)
        x2_ordered = np.all(self.a.x2 <= self.b.x2) and np.any(self.a.x2 < self.b.x2)
        if not (x1_ordered and x2_ordered):
            raise OrderViolationError("expected x1_a > x1_b and x2_a < x2_b in the cone order")


@dataclass(frozen=True)
class MonotonicityViolation:
    time: float
    virus: int
    node: int
    margin: float


@dataclass(frozen=True)
class ProbeResult:
    holds: bool
    min_margin: float
    first_violation: Optional[MonotonicityViolation] = None


@dataclass
class _Recorder:
    times: List[float] = field(default_factory=list)
    values: List[FloatArray] = field(default_factory=list)

    def add(self, t: float, y: FloatArray) -> None:
        self.times.append(float(t))
        self.values.append(np.array(y, dtype=np.float64))

    def build(self, n: int, **kwargs) -> Trajectory:
        ys = np.array(self.values).reshape(len(self.values), 2 * n)
        return Trajectory(times=np.array(self.times), x1=ys[:, :n], x2=ys[:, n:], **kwargs)


def _guard(y: FloatArray, n: int) -> Tuple[FloatArray, float]:
    """Clamp drift out of D; returns the guarded vector and the excess before clamping"""
    x1, x2 = y[:n], y[n:]
    excess = max(0.0, -float(np.min(y)), float(np.max(x1 + x2)) - 1.0)
    if excess == 0.0:
        return y, 0.0
    guarded = np.clip(y, 0.0, None)
    totals = guarded[:n] + guarded[n:]
    over = totals > 1.0
    if np.any(over):
        scale = np.ones(n)
        scale[over] = 1.0 / totals[over]
        guarded = np.concatenate([guarded[:n] * scale, guarded[n:] * scale])
    return guarded, excess


def _captured_limit(m: BivirusModel, window_states: Sequence[FloatArray], capture_tol: float) -> Optional[State]:
    """Polished endemic equilibrium that every state of the window lies within ``capture_tol`` of"""
    try:
        limit = polish_equilibrium(m, State.from_vector(window_states[-1]))
    except EquilibriumNotFoundError:
        return None
    point = limit.as_vector()
    # runs to the DFE keep contracting and pass the strict threshold
    if not np.any(point):
        return None
    if max(float(np.max(np.abs(y - point))) for y in window_states) > capture_tol:
        return None
    return limit


def integrate(
    m: BivirusModel,
    s0: State,
    t_max: Optional[float] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
    *,
    first_step: Optional[float] = None,
    t_eval: Optional[ArrayLike] = None,
    stop_on_convergence: bool = True,
    eps_field: Optional[float] = None,
    window: Optional[int] = None,
) -> Trajectory:
    """Integrate from ``s0`` with a guarded adaptive Runge-Kutta 4(5) stepper.

    Records every accepted step, or samples ``t_eval`` from the dense output.
    Stops early once the field norm stays below ``eps_field`` for ``window``
    accepted steps, or once it stays below ``settings.eps_plateau`` and the
    whole window lies within ``settings.capture_tol`` of the Newton-polished
    limit. Raises ``LeftDomainError`` when a step drifts out of D by more than
    the hard tolerance.
    """
    t_max = settings.t_max if t_max is None else t_max
    rtol = settings.rtol if rtol is None else rtol
    atol = settings.atol if atol is None else atol
    first_step = settings.first_step if first_step is None else first_step
    eps_field = settings.eps_field if eps_field is None else eps_field
    window = settings.convergence_window if window is None else window
    eps_plateau = max(settings.eps_plateau, eps_field)
    hard_tol = settings.domain_hard_tol

    if s0.n != m.n:
        raise DimensionMismatchError(m.n, s0.n, what="initial state")
    if not in_domain(s0, tol=0.0):
        raise DomainError("initial state is outside D")

    n = m.n
    samples = None if t_eval is None else np.sort(np.asarray(t_eval, dtype=np.float64))
    next_sample = 0
    recorder = _Recorder()

    y0 = s0.as_vector()
    if samples is None:
        recorder.add(0.0, y0)
    else:
        while next_sample < samples.shape[0] and samples[next_sample] <= 0.0:
            recorder.add(samples[next_sample], y0)
            next_sample += 1

    solver = RK45(lambda t, y: stacked_field(m, y), 0.0, y0, t_max,
                  rtol=rtol, atol=atol, first_step=min(first_step, t_max))
    accepted = rejected = 0
    max_excess = 0.0
    recent = deque(maxlen=window)
    recent_states = deque(maxlen=window)
    next_capture = 0
    verdict = TerminalVerdict.MAX_TIME_REACHED

    def partial(final_verdict: TerminalVerdict) -> Trajectory:
        return recorder.build(
            n, steps_accepted=accepted, steps_rejected=rejected, terminal_verdict=final_verdict,
            rtol=rtol, atol=atol, max_domain_excess=max_excess,
        )

    while solver.status == "running":
        t_prev = solver.t
        evaluations = solver.nfev
        message = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflowError(f"integration failed at t={t_prev:.6g}: {message}",
                                         partial(TerminalVerdict.STEP_SIZE_UNDERFLOW))
        accepted += 1
        rejected += max(0, (solver.nfev - evaluations) // solver.n_stages - 1)

        y, excess = _guard(solver.y, n)
        max_excess = max(max_excess, excess)
        if excess > hard_tol:
            raise LeftDomainError(f"step to t={solver.t:.6g} left D by {excess:.3e}",
                                  partial(TerminalVerdict.LEFT_DOMAIN))
        if excess > 0.0:
            if excess > settings.domain_tol:
                logger.debug(f"Clamped drift {excess:.3e} at t={solver.t:.6g}")
            solver.y = y
            solver.f = stacked_field(m, y)

        if samples is None:
            recorder.add(solver.t, y)
        elif next_sample < samples.shape[0] and samples[next_sample] <= solver.t:
            dense = solver.dense_output()
            while next_sample < samples.shape[0] and samples[next_sample] <= solver.t:
                t_sample = samples[next_sample]
                y_sample = y if t_sample == solver.t else _guard(dense(t_sample), n)[0]
                recorder.add(t_sample, y_sample)
                next_sample += 1

        recent.append(float(np.max(np.abs(solver.f))))
        recent_states.append(np.array(y, dtype=np.float64))
        if not stop_on_convergence or len(recent) < window:
            continue
        if max(recent) < eps_field:
            verdict = TerminalVerdict.CONVERGED
            break
        # RK45 steps near an endemic equilibrium leave the field norm above eps_field
        if max(recent) < eps_plateau and accepted >= next_capture:
            if _captured_limit(m, list(recent_states), settings.capture_tol) is not None:
                verdict = TerminalVerdict.CONVERGED
                break
            next_capture = accepted + max(1, window // 2)

    if samples is not None and next_sample < samples.shape[0] and verdict != TerminalVerdict.CONVERGED:
        logger.debug(f"{samples.shape[0] - next_sample} sample times beyond t={solver.t:.6g} not reached")
    if samples is not None and not recorder.times:
        recorder.add(solver.t, solver.y)

    traj = partial(verdict)
    log_with_context(logger, "debug", "integration finished", t_final=float(solver.t),
                     accepted=accepted, rejected=rejected, verdict=verdict.value)
    return traj


def _field_norm(m: BivirusModel, s: State) -> float:
    return float(np.max(np.abs(stacked_field(m, s.as_vector()))))


def detect_convergence(
    traj: Trajectory,
    m: BivirusModel,
    eps_field: Optional[float] = None,
    window: Optional[int] = None,
    *,
    records: Sequence[EquilibriumRecord] = (),
) -> ConvergenceVerdict:
    """Converged when the integrator stopped on convergence, or the trailing
    window passes the same test: field norm below ``eps_field``, or below the
    plateau threshold with the window captured by the polished limit.

    The limit is polished by Newton, classified, and matched against
    ``records`` by label.
    """
    eps_field = settings.eps_field if eps_field is None else eps_field
    window = settings.convergence_window if window is None else window
    eps_plateau = max(settings.eps_plateau, eps_field)

    if traj.terminal_verdict in (TerminalVerdict.LEFT_DOMAIN, TerminalVerdict.STEP_SIZE_UNDERFLOW):
        return ConvergenceVerdict(status=traj.terminal_verdict)
    if traj.terminal_verdict != TerminalVerdict.CONVERGED:
        if len(traj) < window:
            return ConvergenceVerdict(status=TerminalVerdict.MAX_TIME_REACHED)
        tail = range(len(traj) - window, len(traj))
        norms = [_field_norm(m, traj.state(i)) for i in tail]
        settled = max(norms) < eps_field or (
            max(norms) < eps_plateau
            and _captured_limit(m, [traj.state(i).as_vector() for i in tail], settings.capture_tol) is not None
        )
        if not settled:
            return ConvergenceVerdict(status=TerminalVerdict.MAX_TIME_REACHED)

    final = traj.final_state
    try:
        limit = polish_equilibrium(m, final)
    except EquilibriumNotFoundError as exc:
        logger.warning(f"Limit point could not be polished: {exc}")
        return ConvergenceVerdict(status=TerminalVerdict.MAX_TIME_REACHED)

    record = classify_equilibrium(m, limit)
    matched = match_record(record, records)
    if matched is not None:
        record = matched
    return ConvergenceVerdict(
        status=TerminalVerdict.CONVERGED,
        limit=limit,
        record=record,
        matched_label=matched.label if matched is not None else None,
        terminal_distance=final.distance(limit),
    )


def trajectory_report(traj: Trajectory, verdict: Optional[ConvergenceVerdict] = None) -> TrajectoryReport:
    final = traj.final_state
    status = verdict.status if verdict is not None else traj.terminal_verdict
    return TrajectoryReport(
        verdict=status,
        matched_label=verdict.matched_label if verdict is not None else None,
        matched_kind=verdict.record.kind if verdict is not None and verdict.record is not None else None,
        terminal_distance=verdict.terminal_distance if verdict is not None else None,
        t_final=float(traj.times[-1]),
        samples=len(traj),
        steps_accepted=traj.steps_accepted,
        steps_rejected=traj.steps_rejected,
        final_x1=final.x1.tolist(),
        final_x2=final.x2.tolist(),
        max_domain_excess=traj.max_domain_excess,
    )


def sample_initial_conditions(n: int, count: int, rng_seed: int) -> List[State]:
    """Uniform starts in D, one independent child stream per trajectory.

    Child ``i`` of ``SeedSequence(rng_seed)`` drives start ``i``, so a start
    does not depend on ``count``.
    """
    if count <= 0:
        return []
    states = []
    for child in np.random.SeedSequence(rng_seed).spawn(count):
        rng = np.random.default_rng(child)
        x1 = rng.uniform(0.0, 1.0, size=n)
        x2 = rng.uniform(0.0, 1.0, size=n)
        total = float(np.max(x1 + x2))
        if total > 1.0:
            scale = total * (1.0 + 1e-6)
            x1, x2 = x1 / scale, x2 / scale
        states.append(State(x1, x2))
    return states


def monotonicity_probe(
    m: BivirusModel,
    pair: OrderedPair,
    t_samples: ArrayLike,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ProbeResult:
    """Check that the flow keeps the strict cone order of ``pair`` at every sample time after 0"""
    times = np.sort(np.asarray(t_samples, dtype=np.float64))
    times = times[times > 0]
    if times.size == 0:
        return ProbeResult(holds=True, min_margin=float("inf"))
    t_end = float(times[-1])
    runs = [
        integrate(m, s, t_max=t_end, rtol=rtol, atol=atol, t_eval=times, stop_on_convergence=False)
        for s in (pair.a, pair.b)
    ]
    traj_a, traj_b = runs
    margins = (traj_a.x1 - traj_b.x1, traj_b.x2 - traj_a.x2)
    min_margin = float(min(np.min(margins[0]), np.min(margins[1])))
    tolerance = -1e-9
    for row, t in enumerate(traj_a.times):
        for virus, margin in enumerate(margins, start=1):
            bad = np.flatnonzero(margin[row] < tolerance)
            if bad.size:
                node = int(bad[0])
                return ProbeResult(
                    holds=False,
                    min_margin=min_margin,
                    first_violation=MonotonicityViolation(float(t), virus, node + 1, float(margin[row, node])),
                )
    return ProbeResult(holds=True, min_margin=min_margin)


def _census_run(
    m: BivirusModel,
    index: int,
    s0: State,
    rng_seed: int,
    t_max: float,
    records: Sequence[EquilibriumRecord],
) -> CensusRun:
    with RunContext(f"run-{index}"):
        try:
            traj = integrate(m, s0, t_max=t_max)
        except IntegrationError as exc:
            logger.warning(f"Census run {index} failed: {exc}")
            t_final = float(exc.trajectory.times[-1]) if exc.trajectory is not None else 0.0
            failed = (TerminalVerdict.LEFT_DOMAIN if isinstance(exc, LeftDomainError)
                      else TerminalVerdict.STEP_SIZE_UNDERFLOW)
            return CensusRun(run_id=index, seed=rng_seed, verdict=failed, t_final=t_final)
        verdict = detect_convergence(traj, m, records=records)
        log_with_context(logger, "debug", "census run finished",
                         verdict=verdict.status.value, label=verdict.matched_label)
        return CensusRun(
            run_id=index,
            seed=rng_seed,
            verdict=verdict.status,
            matched_kind=verdict.record.kind if verdict.record is not None else None,
            matched_label=verdict.matched_label,
            terminal_distance=verdict.terminal_distance,
            t_final=float(traj.times[-1]),
        )


def convergence_census(
    m: BivirusModel,
    count: int,
    rng_seed: int,
    t_max: Optional[float] = None,
    *,
    records: Optional[Sequence[EquilibriumRecord]] = None,
    max_workers: Optional[int] = None,
) -> CensusSummary:
    """Integrate from ``count`` random starts and histogram the attained equilibria.

    Runs are independent and merged by index. Unmatched limits are keyed as
    ``unmatched:<kind>``.
    """
    t_max = settings.t_max if t_max is None else t_max
    if count <= 0:
        return CensusSummary(count=0, seed=rng_seed, t_max=t_max)
    if records is None:
        records = enumerate_equilibria(m).records

    starts = sample_initial_conditions(m.n, count, rng_seed)
    workers = settings.max_workers if max_workers is None else max_workers
    tasks = list(enumerate(starts))
    if workers <= 1:
        runs = [_census_run(m, i, s, rng_seed, t_max, records) for i, s in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda task: _census_run(m, task[0], task[1], rng_seed, t_max, records), tasks))

    converged = [r for r in runs if r.verdict == TerminalVerdict.CONVERGED]
    histogram = Counter(
        r.matched_label or f"unmatched:{r.matched_kind.value if r.matched_kind else 'unknown'}"
        for r in converged
    )
    kinds = Counter(r.matched_kind.value for r in converged if r.matched_kind is not None)
    summary = CensusSummary(
        count=count,
        seed=rng_seed,
        t_max=t_max,
        converged=len(converged),
        fraction_converged=len(converged) / count,
        histogram=dict(sorted(histogram.items())),
        kind_histogram=dict(sorted(kinds.items())),
        unconverged_runs=[r.run_id for r in runs if r.verdict != TerminalVerdict.CONVERGED],
        runs=runs,
    )
    logger.info(f"Census: {summary.converged}/{count} converged, histogram {summary.histogram}")
    return summary

