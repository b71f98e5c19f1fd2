import numpy as np
import pytest

from bivirus_hoi.domain.spectral import (
    EigspecVerdict,
    dominant_gap,
    eigspec_consistency,
    is_irreducible,
    metzler_hurwitz,
    perron_vector,
    power_iteration,
    spectral_abscissa,
    spectral_radius,
    spectral_summary,
)
from bivirus_hoi.exceptions import SpectralInputError

RING = np.eye(5) + np.roll(np.eye(5), -1, axis=1)


def _random_irreducible(rng: np.random.Generator, n: int) -> np.ndarray:
    mat = rng.uniform(0.0, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < 0.4)
    return mat + np.roll(np.eye(n), 1, axis=1) * rng.uniform(0.1, 1.0)


class TestSpectralRadius:
    def test_ring_anchors(self):
        assert spectral_radius(RING) == pytest.approx(2.0, abs=1e-12)
        assert spectral_radius(0.2 * RING) == pytest.approx(0.4, abs=1e-12)
        assert spectral_radius(2.0 * RING) == pytest.approx(4.0, abs=1e-12)

    def test_rejects_negative_and_non_square(self):
        with pytest.raises(SpectralInputError):
            spectral_radius([[1.0, -1.0], [0.0, 1.0]])
        with pytest.raises(SpectralInputError):
            spectral_radius(np.ones((2, 3)))
        with pytest.raises(SpectralInputError):
            spectral_radius([[np.inf]])

    def test_power_iteration_agrees(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            mat = _random_irreducible(rng, int(rng.integers(2, 9)))
            rho, vec = power_iteration(mat)
            assert rho == pytest.approx(spectral_radius(mat), rel=1e-8)
            assert np.all(vec > 0)

    def test_damping_an_entry_never_increases_radius(self):
        rng = np.random.default_rng(29)
        for _ in range(1000):
            mat = _random_irreducible(rng, int(rng.integers(2, 9)))
            rows, cols = np.nonzero(mat)
            pick = int(rng.integers(0, rows.size))
            damped = mat.copy()
            damped[rows[pick], cols[pick]] *= rng.uniform(0.05, 0.95)
            assert is_irreducible(damped)
            assert spectral_radius(damped) <= spectral_radius(mat) + 1e-12

    def test_power_iteration_on_zero_matrix(self):
        rho, vec = power_iteration(np.zeros((3, 3)))
        assert rho == 0.0
        np.testing.assert_allclose(vec, np.full(3, 1 / 3))


class TestSpectralAbscissa:
    def test_anchors(self):
        assert spectral_abscissa(-np.eye(5) + 2.0 * RING) == pytest.approx(3.0, abs=1e-12)
        assert spectral_abscissa(-np.eye(5) + 0.2 * RING) == pytest.approx(-0.6, abs=1e-12)
        assert spectral_abscissa(np.diag([-1.0, -2.0])) == pytest.approx(-1.0)

    def test_complex_spectrum_uses_real_part(self):
        rotation = np.array([[0.0, -1.0], [1.0, 0.0]]) - 0.5 * np.eye(2)
        assert spectral_abscissa(rotation) == pytest.approx(-0.5)


class TestIrreducibility:
    def test_cases(self):
        assert is_irreducible(RING)
        assert is_irreducible([[0.0]])
        assert not is_irreducible([[0.0, 1.0], [0.0, 0.0]])
        assert not is_irreducible(np.eye(3))


class TestPerronVector:
    def test_ring_is_uniform(self):
        np.testing.assert_allclose(perron_vector(RING), np.full(5, 0.2), atol=1e-12)

    def test_random_irreducible_positive_and_simple(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            mat = _random_irreducible(rng, int(rng.integers(2, 9)))
            vec = perron_vector(mat)
            assert np.all(vec > 0)
            assert vec.sum() == pytest.approx(1.0)
            np.testing.assert_allclose(mat @ vec, spectral_radius(mat) * vec, atol=1e-9)
            assert dominant_gap(mat) > 0

    def test_summary(self):
        summary = spectral_summary(RING)
        assert summary.rho == pytest.approx(2.0)
        assert summary.s_abscissa == pytest.approx(2.0)
        assert summary.is_irreducible
        np.testing.assert_allclose(summary.dominant_eigvec, np.full(5, 0.2), atol=1e-12)

    def test_summary_of_reducible_has_no_vector(self):
        summary = spectral_summary(np.diag([1.0, 2.0]))
        assert not summary.is_irreducible
        assert summary.dominant_eigvec is None


class TestEigspecConsistency:
    @pytest.mark.parametrize(
        "scale, verdict, radius",
        [(0.2, EigspecVerdict.NEGATIVE, 0.4), (0.5, EigspecVerdict.ZERO, 1.0), (2.0, EigspecVerdict.POSITIVE, 4.0)],
    )
    def test_trichotomy_on_ring(self, scale, verdict, radius):
        result = eigspec_consistency(-np.ones(5), scale * RING)
        assert result.verdict == verdict
        assert result.radius == pytest.approx(radius, abs=1e-10)

    def test_accepts_diagonal_matrix(self):
        result = eigspec_consistency(-np.eye(5), 0.2 * RING)
        assert result.abscissa == pytest.approx(-0.6)

    def test_random_matrices_agree_with_dense_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            n_mat = _random_irreducible(rng, n) if n > 1 else rng.uniform(0.1, 2.0, size=(1, 1))
            lam = -rng.uniform(0.2, 2.0, size=n)
            result = eigspec_consistency(lam, n_mat)
            oracle = float(np.max(np.linalg.eigvals(np.diag(lam) + n_mat).real))
            if abs(oracle) > 1e-6:
                assert (result.verdict == EigspecVerdict.POSITIVE) == (oracle > 0)
                assert (result.radius > 1) == (oracle > 0)

    def test_input_checks(self):
        with pytest.raises(SpectralInputError):
            eigspec_consistency([-1.0, 0.0], np.ones((2, 2)))
        with pytest.raises(SpectralInputError):
            eigspec_consistency([[-1.0, 0.5], [0.0, -1.0]], np.ones((2, 2)))
        with pytest.raises(SpectralInputError):
            eigspec_consistency([-1.0, -1.0], np.eye(2))


class TestMetzlerHurwitz:
    def test_stable_with_certificate(self):
        mat = -np.eye(5) + 0.2 * RING
        result = metzler_hurwitz(mat)
        assert result.is_hurwitz
        assert result.abscissa == pytest.approx(-0.6)
        assert np.all(result.certificate > 0)
        assert np.all(mat @ result.certificate < 0)

    def test_unstable(self):
        result = metzler_hurwitz(-np.eye(5) + 2.0 * RING)
        assert not result.is_hurwitz
        assert result.certificate is None

    def test_random_metzler_certificates(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            mat = rng.uniform(0.0, 1.0, size=(n, n))
            np.fill_diagonal(mat, -rng.uniform(0.0, 2.0 * n, size=n))
            result = metzler_hurwitz(mat)
            oracle = float(np.max(np.linalg.eigvals(mat).real))
            if abs(oracle) > 1e-8:
                assert result.is_hurwitz == (oracle < 0)
            if result.certificate is not None:
                assert np.all(result.certificate > 0)
                assert np.all(mat @ result.certificate < 0)

    def test_rejects_non_metzler(self):
        with pytest.raises(SpectralInputError):
            metzler_hurwitz([[-1.0, -0.1], [0.0, -1.0]])
