import numpy as np
import pytest

from uvm_pricer.errors import CorrelationError
from uvm_pricer.numerics.correlation import (
    CorrParams,
    build_gamma,
    gamma_from_rho,
    is_psd,
    min_eigenpair,
    n_pairs,
    nearest_psd,
    pair_indices,
    sqrt_gamma,
)


def random_correlation(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((d, d + 2))
    cov = a @ a.T
    scale = 1.0 / np.sqrt(np.diag(cov))
    return cov * np.outer(scale, scale)


class TestBuildGamma:
    def test_one_asset(self):
        np.testing.assert_array_equal(build_gamma(CorrParams(d=1, rho=())), [[1.0]])

    def test_three_assets_pair_order(self):
        gamma = build_gamma(CorrParams(d=3, rho=(0.1, 0.2, 0.3)))
        expected = [[1.0, 0.1, 0.2], [0.1, 1.0, 0.3], [0.2, 0.3, 1.0]]
        np.testing.assert_array_equal(gamma, expected)

    def test_pair_indices_are_lexicographic(self):
        iu, ju = pair_indices(4)
        pairs = list(zip(iu.tolist(), ju.tolist()))
        assert pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        assert n_pairs(4) == 6

    def test_wrong_length(self):
        with pytest.raises(CorrelationError) as excinfo:
            CorrParams(d=3, rho=(0.1, 0.2))
        assert excinfo.value.name == "bad_length"

    def test_out_of_range(self):
        with pytest.raises(CorrelationError):
            CorrParams(d=2, rho=(1.5,))


class TestIsPsd:
    def test_identity(self):
        assert is_psd(np.eye(4), tol=0.0)

    def test_boundary_equicorrelation(self):
        assert is_psd(gamma_from_rho(np.full(3, -0.5), 3), tol=1e-12)

    def test_indefinite(self):
        assert not is_psd(gamma_from_rho(np.full(3, -0.9), 3))

    @pytest.mark.parametrize("d", range(2, 9))
    def test_nonnegative_equicorrelation(self, d):
        for rho in (0.0, 0.3, 0.99):
            assert is_psd(gamma_from_rho(np.full(n_pairs(d), rho), d))

    def test_min_eigenpair(self):
        value, vector = min_eigenpair(gamma_from_rho(np.full(3, -0.9), 3))
        assert value == pytest.approx(-0.8)
        assert np.linalg.norm(vector) == pytest.approx(1.0)


class TestSqrtGamma:
    def test_identity(self):
        np.testing.assert_allclose(sqrt_gamma(np.eye(3)), np.eye(3))

    def test_two_assets(self):
        expected = [[1.0, 0.0], [0.5, np.sqrt(0.75)]]
        root = sqrt_gamma(gamma_from_rho(np.array([0.5]), 2))
        np.testing.assert_allclose(root, expected, atol=1e-12)

    def test_singular_boundary_is_reconstructed(self):
        gamma = gamma_from_rho(np.full(3, -0.5), 3)
        root = sqrt_gamma(gamma)
        np.testing.assert_allclose(root @ root.T, gamma, atol=1e-8)

    def test_random_correlations_are_reconstructed(self):
        rng = np.random.default_rng(7)
        for d in (2, 3, 5, 10):
            gamma = random_correlation(d, rng)
            root = sqrt_gamma(gamma)
            np.testing.assert_allclose(root @ root.T, gamma, atol=1e-8)

    def test_indefinite_reports_min_eigenvalue(self):
        with pytest.raises(CorrelationError) as excinfo:
            sqrt_gamma(gamma_from_rho(np.full(3, -0.9), 3))
        assert excinfo.value.min_eigenvalue == pytest.approx(-0.8)

    def test_psd_sampled_boxes(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            d = int(rng.integers(2, 7))
            gamma = gamma_from_rho(rng.uniform(-0.5, 0.5, n_pairs(d)), d)
            if is_psd(gamma):
                root = sqrt_gamma(gamma)
                np.testing.assert_allclose(root @ root.T, gamma, atol=1e-8)


class TestNearestPsd:
    def test_psd_input_is_unchanged(self):
        gamma = gamma_from_rho(np.array([0.2, -0.1, 0.4]), 3)
        np.testing.assert_allclose(nearest_psd(gamma), gamma)

    def test_two_assets_are_always_psd(self):
        gamma = gamma_from_rho(np.array([-0.99]), 2)
        np.testing.assert_allclose(nearest_psd(gamma), gamma)

    def test_equicorrelation_repair(self):
        repaired = nearest_psd(gamma_from_rho(np.full(3, -0.9), 3))
        np.testing.assert_allclose(np.diag(repaired), 1.0)
        assert min_eigenpair(repaired)[0] >= -1e-10
        iu, ju = pair_indices(3)
        np.testing.assert_allclose(repaired[iu, ju], -0.5, atol=1e-8)

    def test_random_symmetric_inputs(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            d = int(rng.integers(3, 8))
            rho = rng.uniform(-1.0, 1.0, n_pairs(d))
            gamma = gamma_from_rho(rho, d)
            repaired = nearest_psd(gamma)
            iu, ju = pair_indices(d)
            np.testing.assert_allclose(np.diag(repaired), 1.0)
            np.testing.assert_allclose(repaired, repaired.T)
            assert min_eigenpair(repaired)[0] >= -1e-10
            assert np.abs(repaired[iu, ju]).max() <= 1.0 + 1e-12

    def test_repair_is_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            d = int(rng.integers(3, 7))
            rho = rng.uniform(-1.0, 1.0, n_pairs(d))
            repaired = nearest_psd(gamma_from_rho(rho, d))
            np.testing.assert_allclose(nearest_psd(repaired), repaired, atol=1e-8)
