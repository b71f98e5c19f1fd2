import io

import numpy as np
import pytest

from bivirus_hoi.config import settings
from bivirus_hoi.domain.dynamics import (
    OrderedPair,
    Trajectory,
    convergence_census,
    detect_convergence,
    integrate,
    monotonicity_probe,
    sample_initial_conditions,
    trajectory_report,
)
from bivirus_hoi.domain.model_core import State, in_domain
from bivirus_hoi.exceptions import DimensionMismatchError, DomainError, OrderViolationError, StepSizeUnderflowError
from bivirus_hoi.schemas.equilibrium import EquilibriumKind, Stability
from bivirus_hoi.schemas.simulation import TerminalVerdict
from bivirus_hoi.utils.csv_io import read_trajectory_csv, trajectory_header, write_trajectory_csv


def _ordered_pair(rng: np.random.Generator, n: int) -> OrderedPair:
    """Random strictly ordered interior pair: a has more virus 1 and less virus 2 than b"""
    low1 = rng.uniform(0.05, 0.4, size=n)
    high1 = low1 + rng.uniform(0.01, 0.2, size=n)
    low2 = rng.uniform(0.05, 0.3, size=n)
    high2 = low2 + rng.uniform(0.01, 0.2, size=n)
    return OrderedPair(a=State(high1, low2), b=State(low1, high2))


class TestIntegrate:
    def test_near_dfe_converges_to_dfe_in_example1(self, example1, example1_catalog):
        traj = integrate(example1, State(np.full(5, 1e-3), np.full(5, 1e-3)))
        assert traj.terminal_verdict == TerminalVerdict.CONVERGED
        assert np.max(np.abs(traj.final_state.as_vector())) < 1e-6
        verdict = detect_convergence(traj, example1, records=example1_catalog.records)
        assert verdict.matched_label == "DFE"
        assert verdict.record.kind == EquilibriumKind.DFE

    def test_dominant_virus_1_start_reaches_boundary_v1(self, example1, example1_catalog):
        traj = integrate(example1, State(np.full(5, 0.9), np.full(5, 0.05)))
        assert traj.terminal_verdict == TerminalVerdict.CONVERGED
        assert traj.times[-1] < settings.t_max
        verdict = detect_convergence(traj, example1, records=example1_catalog.records)
        assert verdict.converged
        assert verdict.matched_label == "boundary_v1"
        assert verdict.record.kind == EquilibriumKind.BOUNDARY_V1
        assert np.all(verdict.limit.x1 >= 0.5)
        assert verdict.terminal_distance <= settings.capture_tol

    def test_endemic_limit_is_captured_above_strict_threshold(self, example2, example2_catalog):
        traj = integrate(example2, State(np.full(5, 0.6), np.full(5, 0.1)))
        assert traj.terminal_verdict == TerminalVerdict.CONVERGED
        verdict = detect_convergence(traj, example2, records=example2_catalog.records)
        assert verdict.matched_label == "boundary_v1"
        assert verdict.record.stability == Stability.STABLE

    def test_convergence_judged_on_unstopped_trajectory(self, example1, example1_catalog):
        traj = integrate(example1, State(np.full(5, 0.9), np.full(5, 0.05)), t_max=150.0, stop_on_convergence=False)
        assert traj.terminal_verdict == TerminalVerdict.MAX_TIME_REACHED
        verdict = detect_convergence(traj, example1, records=example1_catalog.records)
        assert verdict.converged
        assert verdict.matched_label == "boundary_v1"

    @pytest.mark.parametrize("start", [(0.6, 0.2), (0.2, 0.6), (0.3, 0.3)])
    def test_halving_tolerances_keeps_terminal_state(self, example1, example2, start):
        s0 = State(np.full(5, start[0]), np.full(5, start[1]))
        for m in (example1, example2):
            coarse = integrate(m, s0, t_max=30.0, stop_on_convergence=False)
            fine = integrate(m, s0, t_max=30.0, rtol=settings.rtol / 2, atol=settings.atol / 2,
                             stop_on_convergence=False)
            assert coarse.final_state.distance(fine.final_state) < 1e-6

    def test_single_virus_start_keeps_competitor_extinct(self, example2):
        traj = integrate(example2, State(np.full(5, 0.3), np.zeros(5)), t_max=20.0)
        assert not np.any(traj.x2)
        assert np.all(traj.x1[-1] > 0.3)

    def test_stays_in_domain(self, example2, random_model):
        rng = np.random.default_rng(8)
        models = [example2] + [random_model(rng, int(rng.integers(2, 6))) for _ in range(3)]
        for m in models:
            for s0 in sample_initial_conditions(m.n, 3, int(rng.integers(0, 1000))):
                traj = integrate(m, s0, t_max=50.0)
                assert traj.max_domain_excess <= 1e-7
                assert all(in_domain(traj.state(i), tol=1e-12) for i in range(len(traj)))

    def test_sampling_grid(self, classic):
        times = np.linspace(0.0, 5.0, 11)
        traj = integrate(classic, State([0.1, 0.2], [0.3, 0.1]), t_max=5.0, t_eval=times, stop_on_convergence=False)
        np.testing.assert_allclose(traj.times, times)
        assert len(traj) == 11
        np.testing.assert_array_equal(traj.x1[0], [0.1, 0.2])

    def test_rejects_start_outside_domain(self, classic):
        with pytest.raises(DomainError):
            integrate(classic, State([0.7, 0.1], [0.4, 0.1]))
        with pytest.raises(DimensionMismatchError):
            integrate(classic, State.zeros(3))

    def test_short_horizon_is_not_converged(self, example2, example2_catalog):
        traj = integrate(example2, State(np.full(5, 0.2), np.full(5, 0.2)), t_max=0.01)
        assert traj.terminal_verdict == TerminalVerdict.MAX_TIME_REACHED
        verdict = detect_convergence(traj, example2, records=example2_catalog.records)
        assert verdict.status == TerminalVerdict.MAX_TIME_REACHED
        assert trajectory_report(traj, verdict).headline() == "max_time_reached"


class TestReport:
    def test_headline_of_matched_run(self, classic, classic_catalog):
        traj = integrate(classic, State([0.3, 0.3], [0.3, 0.3]))
        report = trajectory_report(traj, detect_convergence(traj, classic, records=classic_catalog.records))
        assert report.headline() == "converged: coexistence"
        assert report.samples == len(traj)
        assert report.steps_accepted == len(traj) - 1


class TestCsv:
    def test_written_trajectory_reads_back_exactly(self, classic):
        traj = integrate(classic, State([0.1, 0.2], [0.3, 0.1]), t_max=2.0)
        buffer = io.StringIO()
        write_trajectory_csv(traj, buffer)
        buffer.seek(0)
        assert buffer.readline().strip() == ",".join(trajectory_header(2))
        buffer.seek(0)
        times, x1, x2 = read_trajectory_csv(buffer)
        np.testing.assert_array_equal(times, traj.times)
        np.testing.assert_array_equal(x1, traj.x1)
        assert all(in_domain(State(a, b), tol=1e-12) for a, b in zip(x1, x2))

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            read_trajectory_csv(io.StringIO("time,a,b\n0,0,0\n"))


class TestInitialConditions:
    def test_prefix_stable_and_in_domain(self):
        five = sample_initial_conditions(4, 5, 42)
        three = sample_initial_conditions(4, 3, 42)
        for a, b in zip(three, five):
            np.testing.assert_array_equal(a.as_vector(), b.as_vector())
        assert all(in_domain(s) for s in five)
        assert sample_initial_conditions(4, 0, 42) == []


class TestMonotonicity:
    def test_ordered_pair_validation(self):
        with pytest.raises(OrderViolationError):
            OrderedPair(a=State([0.2], [0.3]), b=State([0.3], [0.2]))
        with pytest.raises(DomainError):
            OrderedPair(a=State([0.5], [0.0]), b=State([0.1], [0.3]))

    def test_cone_order_is_preserved(self, example1, example2, classic, random_model):
        rng = np.random.default_rng(99)
        models = [example1, example2, classic] + [random_model(rng, int(rng.integers(2, 5))) for _ in range(7)]
        times = np.linspace(0.5, 10.0, 20)
        pairs = 0
        for m in models:
            for _ in range(5):
                result = monotonicity_probe(m, _ordered_pair(rng, m.n), times)
                assert result.holds, result.first_violation
                assert result.min_margin >= -1e-9
                pairs += 1
        assert pairs == 50


class TestCensus:
    def test_classic_census_reaches_coexistence(self, classic, classic_catalog):
        summary = convergence_census(classic, 8, rng_seed=1, records=classic_catalog.records)
        assert summary.converged == 8
        assert summary.fraction_converged == 1.0
        assert summary.histogram == {"coexistence": 8}
        assert [run.run_id for run in summary.runs] == list(range(8))

    def test_subcritical_census_reaches_dfe(self, subcritical):
        summary = convergence_census(subcritical, 50, rng_seed=3)
        assert summary.histogram == {"DFE": 50}
        assert summary.kind_histogram == {"DFE": 50}

    def test_example1_census_reaches_all_three_stable_states(self, example1, example1_catalog):
        summary = convergence_census(example1, 100, rng_seed=0, records=example1_catalog.records)
        assert summary.fraction_converged == 1.0
        assert summary.unconverged_runs == []
        assert set(summary.histogram) == {"DFE", "boundary_v1", "boundary_v2"}
        assert sum(summary.histogram.values()) == 100

    def test_example2_census_reaches_both_boundaries(self, example2, example2_catalog):
        summary = convergence_census(example2, 100, rng_seed=0, records=example2_catalog.records)
        assert summary.fraction_converged == 1.0
        assert set(summary.histogram) == {"boundary_v1", "boundary_v2"}
        assert min(summary.histogram.values()) > 0

    def test_step_size_failure_has_its_own_verdict(self, classic, monkeypatch):
        def failing(m, s0, **kwargs):
            partial = Trajectory(
                times=np.array([0.0]), x1=s0.x1[None, :], x2=s0.x2[None, :], steps_accepted=0,
                steps_rejected=0, terminal_verdict=TerminalVerdict.STEP_SIZE_UNDERFLOW, rtol=1e-8, atol=1e-10,
            )
            raise StepSizeUnderflowError("step size underflow at t=0", partial)

        monkeypatch.setattr("bivirus_hoi.domain.dynamics.integrate", failing)
        summary = convergence_census(classic, 2, rng_seed=0, records=[], max_workers=1)
        assert [run.verdict for run in summary.runs] == [TerminalVerdict.STEP_SIZE_UNDERFLOW] * 2
        assert summary.converged == 0
        assert summary.unconverged_runs == [0, 1]

    def test_detect_convergence_keeps_failure_verdict(self, classic):
        traj = Trajectory(
            times=np.array([0.0]), x1=np.array([[0.1, 0.1]]), x2=np.array([[0.1, 0.1]]), steps_accepted=0,
            steps_rejected=0, terminal_verdict=TerminalVerdict.STEP_SIZE_UNDERFLOW, rtol=1e-8, atol=1e-10,
        )
        assert detect_convergence(traj, classic).status == TerminalVerdict.STEP_SIZE_UNDERFLOW

    def test_independent_of_worker_count(self, classic, classic_catalog):
        serial = convergence_census(classic, 4, rng_seed=5, records=classic_catalog.records, max_workers=1)
        pooled = convergence_census(classic, 4, rng_seed=5, records=classic_catalog.records, max_workers=3)
        assert serial.model_dump(exclude={"runs"}) == pooled.model_dump(exclude={"runs"})

    def test_empty_census(self, classic):
        summary = convergence_census(classic, 0, rng_seed=0, records=[])
        assert summary.count == 0
        assert summary.runs == []
