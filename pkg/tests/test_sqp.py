from itertools import product

import numpy as np
import pytest

from uvm_pricer.errors import SqpError
from uvm_pricer.models import SqpConfig
from uvm_pricer.numerics.correlation import gamma_from_rho, min_eigenpair
from uvm_pricer.numerics.sqp import ParameterBox, UvmPoint, maximize, psd_margin
from uvm_pricer.numerics.treestep import make_branches, step_expectation


def box(d, sigma=(0.1, 0.2), rho=(-0.5, 0.5)):
    k = d * (d - 1) // 2
    return ParameterBox(
        d=d,
        lower=np.array([sigma[0]] * d + [rho[0]] * k),
        upper=np.array([sigma[1]] * d + [rho[1]] * k),
    )


def centre(b: ParameterBox) -> UvmPoint:
    return UvmPoint.from_vector(b.center, b.d)


class TestMaximize:
    def test_degenerate_box_returns_start(self):
        b = box(2, sigma=(0.2, 0.2), rho=(0.0, 0.0))
        start = centre(b)
        result = maximize(lambda c: float(c.sigma.sum()), b, start)
        assert result.iterations == 0
        assert result.value == pytest.approx(0.4)
        np.testing.assert_array_equal(result.point.as_vector(), start.as_vector())

    def test_interior_quadratic(self):
        b = box(1)
        result = maximize(lambda c: -((c.sigma[0] - 0.17) ** 2), b, centre(b))
        assert result.point.sigma[0] == pytest.approx(0.17, abs=1e-4)

    def test_monotone_objective_hits_upper_bound(self):
        b = box(1)
        result = maximize(lambda c: float(c.sigma[0]), b, centre(b))
        assert result.point.sigma[0] == pytest.approx(0.2, abs=1e-6)

    def test_never_worse_than_start(self):
        b = box(2)
        start = centre(b)

        def objective(c):
            return float(np.sin(40.0 * c.sigma[0]) * np.cos(10.0 * c.rho[0]))

        result = maximize(objective, b, start)
        assert result.value >= objective(start)
        assert b.contains(result.point.as_vector())

    def test_start_outside_box(self):
        b = box(1)
        with pytest.raises(SqpError) as excinfo:
            maximize(lambda c: 0.0, b, UvmPoint(np.array([0.3]), np.empty(0)))
        assert excinfo.value.name == "infeasible_start"

    def test_start_with_indefinite_correlation(self):
        b = box(3, rho=(-1.0, 1.0))
        start = UvmPoint(np.full(3, 0.15), np.full(3, -0.9))
        with pytest.raises(SqpError):
            maximize(lambda c: 0.0, b, start)

    def test_start_of_wrong_size(self):
        with pytest.raises(SqpError) as excinfo:
            maximize(lambda c: 0.0, box(2), UvmPoint(np.array([0.15]), np.empty(0)))
        assert excinfo.value.name == "bad_start"

    def test_output_respects_psd_constraint(self):
        b = box(3, rho=(-1.0, 1.0))

        def objective(c):
            return -float(np.sum((c.rho + 0.9) ** 2))

        result = maximize(objective, b, centre(b))
        gamma = gamma_from_rho(result.point.rho, 3)
        assert min_eigenpair(gamma)[0] >= -1e-8
        np.testing.assert_allclose(result.point.rho, -0.5, atol=1e-2)
        assert psd_margin(result.point.as_vector(), 3) >= -1e-8

    def test_concave_quadratics_match_grid_search(self):
        b = box(2)
        sigmas = np.round(np.arange(0.10, 0.2001, 0.01), 10)
        rhos = np.round(np.arange(-0.5, 0.5001, 0.01), 10)
        grid = np.array(list(product(sigmas, sigmas, rhos)))
        rng = np.random.default_rng(17)
        for _ in range(50):
            a = rng.standard_normal((3, 3))
            A = a @ a.T + 0.1 * np.eye(3)
            m = b.lower + rng.uniform(-0.2, 1.2, 3) * (b.upper - b.lower)

            def objective(c, A=A, m=m):
                e = c.as_vector() - m
                return -float(e @ A @ e)

            diffs = grid - m
            grid_best = -np.einsum("ij,jk,ik->i", diffs, A, diffs).max()
            result = maximize(objective, b, centre(b))
            assert b.contains(result.point.as_vector())
            assert result.value >= grid_best - 1e-6

    def test_three_assets_match_grid_search_on_the_psd_boundary(self):
        b = box(3, sigma=(0.15, 0.15), rho=(-1.0, 1.0))
        steps = np.round(np.arange(-1.0, 1.0001, 0.05), 10)
        grid = np.array(list(product(steps, steps, steps)))
        gammas = np.ones((len(grid), 3, 3))
        gammas[:, 0, 1] = gammas[:, 1, 0] = grid[:, 0]
        gammas[:, 0, 2] = gammas[:, 2, 0] = grid[:, 1]
        gammas[:, 1, 2] = gammas[:, 2, 1] = grid[:, 2]
        feasible = grid[np.linalg.eigvalsh(gammas)[:, 0] >= 0.0]
        rng = np.random.default_rng(23)
        for _ in range(10):
            a = rng.standard_normal((3, 3))
            A = a @ a.T + 0.1 * np.eye(3)
            # equicorrelation near -0.8 is indefinite for three assets
            m = rng.uniform(-0.85, -0.75, 3)

            def objective(c, A=A, m=m):
                e = c.rho - m
                return -float(e @ A @ e)

            diffs = feasible - m
            grid_best = -np.einsum("ij,jk,ik->i", diffs, A, diffs).max()
            result = maximize(objective, b, centre(b))
            margin = psd_margin(result.point.as_vector(), 3)
            assert result.value >= grid_best - 1e-5
            assert margin >= -1e-8
            assert margin == pytest.approx(0.0, abs=1e-4)

    def test_small_step_stops_the_search(self):
        b = box(1)
        start = centre(b)
        cfg = SqpConfig(tol_step=10.0, restarts=False)
        result = maximize(lambda c: -((c.sigma[0] - 0.17) ** 2), b, start, cfg)
        assert result.iterations == 1
        assert result.value >= -((0.15 - 0.17) ** 2)
        assert b.contains(result.point.as_vector())


VOLS = (0.1, 0.15, 0.2)


class TestOneStepOutperformer:
    def test_corner_maximum(self, reference_model):
        model = reference_model(2)
        b = ParameterBox.from_model(model)
        branches = make_branches(2, 4, 0)
        x = np.array([100.0, 100.0])

        def outperformer(s):
            return np.maximum(s[:, 1] - s[:, 0], 0.0)

        def objective(c):
            return step_expectation(x, c, 1 / 16, model, branches, outperformer)

        result = maximize(objective, b, centre(b))
        lattice = max(
            objective(UvmPoint(np.array([s1, s2]), np.array([r])))
            for s1, s2, r in product(VOLS, VOLS, (-0.5, 0.0, 0.5))
        )
        assert result.value >= lattice - 1e-8
        assert result.point.rho[0] == pytest.approx(-0.5, abs=1e-3)
