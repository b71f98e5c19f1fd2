import numpy as np
import pytest

from bivirus_hoi.domain.equilibria import (
    FixedPointScheme,
    SolveStatus,
    classify_equilibrium,
    enumerate_equilibria,
    find_coexistence,
    find_single_virus_equilibrium,
    match_record,
    newton_single_virus_equilibrium,
    polish_equilibrium,
    require_single_virus_equilibrium,
)
from bivirus_hoi.domain.model_core import (
    BivirusModel,
    State,
    VirusParams,
    satisfies_zero_or_interior,
    single_virus_field,
    single_virus_jacobian,
)
from bivirus_hoi.domain.spectral import spectral_abscissa
from bivirus_hoi.exceptions import DomainError, EquilibriumNotFoundError
from bivirus_hoi.schemas.equilibrium import EquilibriumKind, Stability


def _every_record(*catalogs):
    for catalog in catalogs:
        yield from catalog.records


class TestSingleVirusEquilibrium:
    def test_classic_endemic_state(self, classic):
        v = classic.virus[0]
        solution = find_single_virus_equilibrium(v, [0.5, 0.5])
        assert solution.status == SolveStatus.CONVERGED
        assert np.max(np.abs(single_virus_field(v, solution.x))) <= 1e-10
        assert np.all(solution.x > 0) and np.all(solution.x < 1)
        assert solution.x[0] > solution.x[1]

    @pytest.mark.parametrize("scheme", list(FixedPointScheme))
    def test_schemes_agree(self, classic, scheme):
        v = classic.virus[0]
        solution = find_single_virus_equilibrium(v, [0.5, 0.5], scheme=scheme, damping=0.3)
        reference = find_single_virus_equilibrium(v, [0.5, 0.5])
        assert solution.converged
        np.testing.assert_allclose(solution.x, reference.x, atol=1e-8)

    def test_direct_scheme_at_default_damping_never_returns_a_wrong_root(self, example1, example2):
        for v, seed in ((example1.virus[0], np.full(5, 0.9)), (example2.virus[0], np.full(5, 0.5))):
            reference = find_single_virus_equilibrium(v, seed)
            solution = find_single_virus_equilibrium(v, seed, scheme=FixedPointScheme.DIRECT)
            assert solution.status in (SolveStatus.CONVERGED, SolveStatus.DIVERGED)
            if solution.converged:
                np.testing.assert_allclose(solution.x, reference.x, atol=1e-8)

    def test_subcritical_virus_goes_extinct(self, subcritical):
        solution = find_single_virus_equilibrium(subcritical.virus[0], np.full(4, 0.5))
        assert solution.status == SolveStatus.CONVERGED_TO_DFE
        assert not np.any(solution.x)

    def test_low_seed_goes_extinct_under_tristability(self, example1):
        solution = find_single_virus_equilibrium(example1.virus[0], np.full(5, 0.01))
        assert solution.status == SolveStatus.CONVERGED_TO_DFE

    def test_seed_must_be_interior(self, classic):
        with pytest.raises(DomainError):
            find_single_virus_equilibrium(classic.virus[0], [0.0, 0.5])
        with pytest.raises(DomainError):
            find_single_virus_equilibrium(classic.virus[0], [1.0, 0.5])

    def test_require_raises_with_last_iterate(self, classic):
        with pytest.raises(EquilibriumNotFoundError) as info:
            require_single_virus_equilibrium(classic.virus[0], [0.5, 0.5], max_iter=1, newton_switch=1e-30)
        assert info.value.last_iterate.shape == (2,)
        assert info.value.iterations == 1

    def test_newton_from_random_seeds_agrees_with_fixed_point(self, example2):
        v = example2.virus[0]
        reference = find_single_virus_equilibrium(v, np.full(5, 0.5))
        assert reference.converged
        assert reference.residual <= 1e-10
        rng = np.random.default_rng(31)
        for _ in range(10):
            solution = newton_single_virus_equilibrium(v, rng.uniform(0.5, 0.99, size=5))
            assert solution.converged
            np.testing.assert_allclose(solution.x, reference.x, atol=1e-8)

    def test_newton_reaches_unstable_endemic_state(self, example1):
        v = example1.virus[0]
        solution = newton_single_virus_equilibrium(v, [0.14, 0.115, 0.112, 0.102, 0.101])
        assert solution.converged
        assert np.max(np.abs(single_virus_field(v, solution.x))) <= 1e-10
        np.testing.assert_allclose(solution.x, [0.140, 0.115, 0.112, 0.102, 0.101], atol=2e-3)
        assert spectral_abscissa(single_virus_jacobian(v, solution.x)) > 0

    def test_newton_rejects_seed_on_the_boundary(self, classic):
        with pytest.raises(DomainError):
            newton_single_virus_equilibrium(classic.virus[0], [0.0, 0.5])

    def test_require_returns_point(self, classic):
        x = require_single_virus_equilibrium(classic.virus[1], [0.5, 0.5])
        assert x[1] > x[0] > 0


class TestClassification:
    def test_dfe_of_example1_is_stable(self, example1):
        record = classify_equilibrium(example1, State.zeros(5))
        assert record.kind == EquilibriumKind.DFE
        assert record.stability == Stability.STABLE
        assert record.s_jacobian == pytest.approx(-0.6, abs=1e-9)
        assert record.nondegenerate
        assert record.saturated and record.strictly_saturated

    def test_dfe_of_example2_is_unstable(self, example2):
        record = classify_equilibrium(example2, State.zeros(5))
        assert record.stability == Stability.UNSTABLE
        assert record.s_jacobian == pytest.approx(3.0, abs=1e-9)

    def test_boundary_kind_and_off_block(self, classic):
        x = require_single_virus_equilibrium(classic.virus[0], [0.5, 0.5])
        record = classify_equilibrium(classic, State(x, np.zeros(2)), label="b1")
        assert record.label == "b1"
        assert record.kind == EquilibriumKind.BOUNDARY_V1
        assert record.off_block_abscissa > 0
        assert not record.saturated
        assert record.stability == Stability.UNSTABLE


class TestPolish:
    def test_snaps_extinct_virus(self, classic):
        x = require_single_virus_equilibrium(classic.virus[0], [0.5, 0.5])
        noisy = State(x + 1e-7, np.full(2, 1e-8))
        polished = polish_equilibrium(classic, noisy)
        assert not np.any(polished.x2)
        np.testing.assert_allclose(polished.x1, x, atol=1e-10)

    def test_snaps_to_dfe(self, example1):
        assert not np.any(polish_equilibrium(example1, State(np.full(5, 1e-9), np.full(5, 1e-8))).as_vector())


class TestEnumeration:
    def test_example1_tristable_catalog(self, example1_catalog):
        kinds = {r.kind for r in example1_catalog.records}
        assert {EquilibriumKind.DFE, EquilibriumKind.BOUNDARY_V1, EquilibriumKind.BOUNDARY_V2} <= kinds
        for label in ("DFE", "boundary_v1", "boundary_v2"):
            assert example1_catalog.by_label(label).s_jacobian < 0
        assert np.all(np.asarray(example1_catalog.by_label("boundary_v1").x1) >= 0.5 - 1e-9)
        assert np.all(np.asarray(example1_catalog.by_label("boundary_v2").x2) >= 0.5 - 1e-9)
        assert not example1_catalog.budget_exhausted

    def test_example1_lists_unstable_boundary_equilibrium(self, example1_catalog):
        unstable = [
            r for r in example1_catalog.of_kind(EquilibriumKind.BOUNDARY_V1) if r.stability == Stability.UNSTABLE
        ]
        assert len(unstable) == 1
        saddle = unstable[0]
        assert saddle.label == "boundary_v1#2"
        np.testing.assert_allclose(saddle.x1, [0.140, 0.115, 0.112, 0.102, 0.101], atol=2e-3)
        assert saddle.s_jacobian == pytest.approx(0.517, abs=5e-3)
        assert saddle.nondegenerate

    def test_example1_has_no_coexistence_and_says_so(self, example1_catalog):
        assert example1_catalog.of_kind(EquilibriumKind.COEXISTENCE) == []
        assert any(w.startswith("no coexistence equilibrium found") for w in example1_catalog.warnings)

    def test_example2_boundaries_stable_and_coexistence_not(self, example2_catalog):
        assert example2_catalog.by_label("DFE").stability == Stability.UNSTABLE
        assert example2_catalog.by_label("boundary_v1").s_jacobian < 0
        assert example2_catalog.by_label("boundary_v2").s_jacobian < 0
        coexistence = example2_catalog.of_kind(EquilibriumKind.COEXISTENCE)
        assert coexistence
        for record in coexistence:
            assert record.residual <= 1e-10
            assert record.s_jacobian >= -1e-8

    def test_classic_has_stable_coexistence(self, classic_catalog):
        coexistence = classic_catalog.of_kind(EquilibriumKind.COEXISTENCE)
        assert len(coexistence) == 1
        assert coexistence[0].stability == Stability.STABLE
        assert classic_catalog.by_label("boundary_v1").stability == Stability.UNSTABLE

    def test_subcritical_classic_has_only_dfe(self, subcritical):
        catalog = enumerate_equilibria(subcritical)
        assert [r.kind for r in catalog.records] == [EquilibriumKind.DFE]

    def test_records_satisfy_structure_and_nondegeneracy(self, example1_catalog, example2_catalog, classic_catalog):
        for record in _every_record(example1_catalog, example2_catalog, classic_catalog):
            assert satisfies_zero_or_interior(record.point, margin=1e-9)
            assert record.nondegenerate
            assert record.residual <= 1e-10

    def test_labels_are_unique(self, example1_catalog):
        labels = [r.label for r in example1_catalog.records]
        assert len(labels) == len(set(labels))

    def test_budget_exhaustion_is_reported(self, example1):
        catalog = enumerate_equilibria(example1, budget=3)
        assert catalog.budget_exhausted
        assert catalog.solver_runs == 3
        assert any("budget 3 exhausted" in warning for warning in catalog.warnings)
        assert catalog.records[0].kind == EquilibriumKind.DFE

    def test_enumeration_is_deterministic(self, classic, classic_catalog):
        again = enumerate_equilibria(classic, max_workers=1)
        assert [r.label for r in again.records] == [r.label for r in classic_catalog.records]
        for a, b in zip(again.records, classic_catalog.records):
            np.testing.assert_allclose(a.x1 + a.x2, b.x1 + b.x2, atol=1e-9)


class TestCoexistenceSearch:
    def test_seeds_outside_interior_are_skipped(self, classic):
        records = find_coexistence(classic, [State([0.0, 0.5], [0.2, 0.2])])
        assert records == []

    def test_duplicate_finds_are_merged(self, classic):
        seeds = [State([0.6, 0.1], [0.1, 0.6]), State([0.55, 0.12], [0.12, 0.55])]
        records = find_coexistence(classic, seeds, max_workers=2)
        assert [r.label for r in records] == ["coexistence"]
        assert records[0].kind == EquilibriumKind.COEXISTENCE

    def test_identical_viruses_share_the_endemic_state(self):
        a = np.eye(4) + np.roll(np.eye(4), -1, axis=1)
        v = VirusParams(delta=np.ones(4), beta_pair=1.0, beta_hoi=0.0, a=a)
        m = BivirusModel(virus=(v, v))
        x_bar = require_single_virus_equilibrium(v, np.full(4, 0.5))
        (record,) = find_coexistence(m, [State(x_bar / 2, x_bar / 2)])
        np.testing.assert_allclose(record.x1, x_bar / 2, atol=1e-10)
        np.testing.assert_allclose(record.x2, record.x1, atol=1e-12)
        assert record.residual <= 1e-10
        # any split of x_bar solves the equations, so the Jacobian is singular
        assert not record.nondegenerate


class TestMatchRecord:
    def test_nearest_of_same_kind(self, classic_catalog):
        target = classic_catalog.by_label("coexistence")
        shifted = target.model_copy(update={"x1": [v + 1e-7 for v in target.x1], "label": ""})
        assert match_record(shifted, classic_catalog.records).label == "coexistence"

    def test_no_match_beyond_tolerance(self, classic_catalog):
        target = classic_catalog.by_label("coexistence")
        shifted = target.model_copy(update={"x1": [v + 1e-2 for v in target.x1]})
        assert match_record(shifted, classic_catalog.records) is None


def test_single_virus_params_helper_matches_builtin(example1):
    v = VirusParams.from_hyperedges(
        np.ones(5), 0.2, 5.0, example1.virus[0].a,
        [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 1, 0, 1.0), (0, 3, 4, 1.0), (3, 4, 0, 1.0), (4, 3, 0, 1.0)],
    )
    np.testing.assert_array_equal(v.b, example1.virus[0].b)
