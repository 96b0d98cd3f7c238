import numpy as np
import pytest

from uvm_pricer.bench.black_scholes import bs_price
from uvm_pricer.engine import pricer
from uvm_pricer.engine.continuation import PayoffContinuation
from uvm_pricer.engine.pricer import (
    StepTask,
    point_value,
    price,
    solve_chunk,
    start_point,
)
from uvm_pricer.errors import BranchError, NumericalFailure, PayoffError
from uvm_pricer.models import PayoffKind, PayoffSpec
from uvm_pricer.numerics.gpr import KernelKind
from uvm_pricer.numerics.sqp import UvmPoint
from uvm_pricer.numerics.treestep import make_branches, step_expectation


class TestStartPoint:
    def test_midpoint_of_the_box(self, reference_model):
        start = start_point(reference_model(3))
        np.testing.assert_allclose(start.sigma, 0.15)
        np.testing.assert_allclose(start.rho, 0.0, atol=1e-12)

    def test_indefinite_midpoint_is_repaired(self, reference_model):
        model = reference_model(3, rho_min=-0.95, rho_max=-0.85)
        start = start_point(model)
        assert np.all(start.rho >= -0.95) and np.all(start.rho <= -0.85)


class TestPointValue:
    def test_single_asset_call_takes_the_upper_volatility(
        self, reference_model, call_payoff, small_algo
    ):
        model = reference_model(1)
        algo = small_algo(N=16)
        solution = point_value(
            np.array([100.0]),
            15,
            model,
            call_payoff,
            PayoffContinuation(call_payoff, 1.0),
            algo,
        )
        assert solution.point.sigma[0] == pytest.approx(0.2, abs=1e-6)
        expected = 0.5 * (100.0 * np.exp(-0.00125 + 0.05) - 100.0)
        assert solution.value == pytest.approx(expected, rel=1e-8)

    def test_degenerate_bounds_equal_the_fixed_expectation(
        self, reference_model, outperformer, small_algo
    ):
        model = reference_model(2).fixed(sigma=[0.2, 0.15], rho=[0.25])
        algo = small_algo(N=8)
        continuation = PayoffContinuation(outperformer, 1.0)
        x = np.array([100.0, 95.0])
        solution = point_value(x, 7, model, outperformer, continuation, algo)
        expected = step_expectation(
            x,
            UvmPoint(np.array([0.2, 0.15]), np.array([0.25])),
            1 / 8,
            model,
            make_branches(2, 4, 0),
            continuation,
        )
        assert solution.value == pytest.approx(expected, rel=1e-12)
        assert solution.iterations == 0

    def test_outperformer_prefers_negative_correlation(
        self, reference_model, outperformer, small_algo
    ):
        solution = point_value(
            np.array([100.0, 100.0]),
            15,
            reference_model(2),
            outperformer,
            PayoffContinuation(outperformer, 1.0),
            small_algo(N=16),
        )
        assert solution.point.rho[0] == pytest.approx(-0.5, abs=1e-3)

    def test_failure_is_located(self, reference_model, call_payoff, small_algo):
        def broken(states):
            raise FloatingPointError("overflow")

        task = StepTask(
            n=3,
            points=np.array([[100.0], [101.0]]),
            model=reference_model(1),
            payoff=call_payoff,
            continuation=broken,
            algo=small_algo(),
        )
        with pytest.raises(NumericalFailure) as excinfo:
            solve_chunk(task, [1])
        assert (excinfo.value.n, excinfo.value.p) == (3, 1)
        assert isinstance(excinfo.value.cause, FloatingPointError)


class TestPrice:
    def test_contract_must_fit_the_market(
        self, reference_model, call_payoff, small_algo
    ):
        with pytest.raises(PayoffError):
            price(reference_model(2), call_payoff, small_algo())

    def test_too_many_branches(self, reference_model, outperformer, small_algo):
        with pytest.raises(BranchError):
            price(reference_model(2), outperformer, small_algo(M=8))

    def test_report(self, reference_model, call_payoff, small_algo):
        report = price(reference_model(1), call_payoff, small_algo(N=4, P=16))
        assert [step.n for step in report.steps] == [3, 2, 1, 0]
        assert all(step.gpr is not None for step in report.steps[:-1])
        assert report.diagnostics["kernel"] == KernelKind.MATERN32.value
        assert report.diagnostics["branches"] == 2
        assert set(report.diagnostics["gpr_band_t1"]) == {"mean", "std"}
        assert len(report.sigma_star) == 1 and report.rho_star == []
        assert report.value > 0

    def test_single_step_is_the_tree_value(
        self, reference_model, call_payoff, small_algo
    ):
        report = price(reference_model(1), call_payoff, small_algo(N=1, P=8))
        expected = 0.5 * (100.0 * np.exp(-0.02 + 0.2) - 100.0)
        assert report.value == pytest.approx(expected, rel=1e-8)
        assert "gpr_band_t1" not in report.diagnostics

    def test_deterministic(self, reference_model, outperformer, small_algo):
        algo = small_algo(N=3, P=16)
        a = price(reference_model(2), outperformer, algo)
        b = price(reference_model(2), outperformer, algo)
        assert a.value == b.value
        assert a.rho_star == b.rho_star

    def test_uncertain_price_dominates_fixed_parameters(
        self, reference_model, outperformer, small_algo
    ):
        algo = small_algo(N=4, P=32)
        uncertain = price(reference_model(2), outperformer, algo).value
        for vol in (0.1, 0.15, 0.2):
            model = reference_model(2).fixed(sigma=[vol, vol], rho=[0.0])
            fixed = price(model, outperformer, algo).value
            assert uncertain >= fixed

    def test_wider_bounds_never_lower_the_price(
        self, reference_model, call_payoff, small_algo
    ):
        algo = small_algo(N=8, P=64)
        narrow = price(reference_model(1), call_payoff, algo).value
        wide = price(reference_model(1, sigma_max=0.25), call_payoff, algo).value
        assert wide >= narrow

    def test_equicorrelated_geo_call_spread_matches_black_scholes(
        self, reference_model, small_algo
    ):
        payoff = PayoffSpec(kind=PayoffKind.GEO_CALL_SPREAD, K1=90.0, K2=110.0)
        model = reference_model(3).fixed(sigma=[0.2] * 3, rho=[0.5] * 3)
        report = price(model, payoff, small_algo(N=8, P=64))
        # ln G has variance σ²(1 + 2ρ)/3 and a dividend of half the variance gap
        vol = 0.2 * np.sqrt(2.0 / 3.0)
        div = 0.5 * (0.2**2 - vol**2)
        expected = bs_price(100.0, 90.0, 0.0, div, vol, 1.0) - bs_price(
            100.0, 110.0, 0.0, div, vol, 1.0
        )
        assert report.value == pytest.approx(expected, abs=0.3)
        np.testing.assert_allclose(report.rho_star, 0.5)

    def test_equicorrelated_geo_call_spread_with_uncertain_volatility(
        self, reference_model, small_algo
    ):
        payoff = PayoffSpec(kind=PayoffKind.GEO_CALL_SPREAD, K1=90.0, K2=110.0)
        algo = small_algo(N=8, P=64)
        model = reference_model(3, rho_min=0.5, rho_max=0.5)
        report = price(model, payoff, algo)
        fixed = price(model.fixed(sigma=[0.15] * 3), payoff, algo)
        np.testing.assert_allclose(report.rho_star, 0.5)
        assert report.value >= fixed.value - 0.05

    def test_subsampled_branches_stay_close_to_full_enumeration(
        self, reference_model, small_algo
    ):
        payoff = PayoffSpec(kind=PayoffKind.GEO_CALL_SPREAD, K1=90.0, K2=110.0)
        model = reference_model(3, rho_min=0.0, rho_max=0.0)
        full = price(model, payoff, small_algo(N=8, P=32))
        subsampled = price(model, payoff, small_algo(N=8, P=32, M=6))
        assert subsampled.diagnostics["branches"] == 6
        assert subsampled.value == pytest.approx(full.value, abs=0.3)

    def test_call_sharpe_runs_on_path_states(self, reference_model, small_algo):
        payoff = PayoffSpec(kind=PayoffKind.CALL_SHARPE, K=100.0, n_monitoring=12)
        report = price(reference_model(1), payoff, small_algo(N=24, P=32))
        assert report.diagnostics["kernel"] == KernelKind.MATERN32_ARD.value
        assert report.diagnostics["grid"] == "monte_carlo"
        assert np.isfinite(report.value) and report.value > 0
        widths = {len(step.gpr.length_scales) for step in report.steps if step.gpr}
        assert widths == {2, 3}


@pytest.mark.integration
class TestPriceAccuracy:
    def test_degenerate_call_matches_black_scholes(
        self, reference_model, call_payoff, small_algo
    ):
        model = reference_model(1).fixed(sigma=[0.2])
        report = price(model, call_payoff, small_algo(N=64, P=200))
        expected = bs_price(100.0, 100.0, 0.0, 0.0, 0.2, 1.0)
        assert report.value == pytest.approx(expected, rel=5e-3)

    def test_worker_count_does_not_change_the_price(
        self, reference_model, outperformer, small_algo
    ):
        pytest.importorskip("ray")
        from uvm_pricer.engine import dispatch

        try:
            dispatch.ensure_ray(2)
        except Exception as e:
            pytest.skip(f"Ray unavailable: {e}")
        model = reference_model(2)
        serial = price(model, outperformer, small_algo(N=3, P=16, workers=1))
        parallel = price(model, outperformer, small_algo(N=3, P=16, workers=2))
        assert serial.value == parallel.value


@pytest.mark.slow
class TestPublishedPrices:
    def test_outperformer(self, reference_model, outperformer, small_algo):
        model = reference_model(2, rho_min=-0.5, rho_max=-0.5)
        report = price(model, outperformer, small_algo(N=16, P=125))
        assert report.value == pytest.approx(13.80, abs=0.10)

    def test_geo_call_spread_two_assets(self, reference_model, small_algo):
        payoff = PayoffSpec(kind=PayoffKind.GEO_CALL_SPREAD, K1=90.0, K2=110.0)
        model = reference_model(2, rho_min=0.0, rho_max=0.0)
        report = price(model, payoff, small_algo(N=16, P=125))
        assert report.value == pytest.approx(10.48, abs=0.08)

    def test_outperformer_uncorrelated(
        self, reference_model, outperformer, small_algo
    ):
        model = reference_model(2, rho_min=0.0, rho_max=0.0)
        report = price(model, outperformer, small_algo(N=16, P=125))
        assert report.value == pytest.approx(11.28, abs=0.10)

    def test_outperformer_spread(self, reference_model, small_algo):
        payoff = PayoffSpec(kind=PayoffKind.OUTPERFORMER_SPREAD)
        model = reference_model(2, rho_min=-0.5, rho_max=-0.5)
        report = price(model, payoff, small_algo(N=32, P=500))
        assert report.value == pytest.approx(11.34, abs=0.12)

    def test_geo_call_spread_five_assets(self, reference_model, small_algo):
        payoff = PayoffSpec(kind=PayoffKind.GEO_CALL_SPREAD, K1=90.0, K2=110.0)
        model = reference_model(5, rho_min=0.0, rho_max=0.0)
        report = price(model, payoff, small_algo(N=16, P=250))
        assert report.value == pytest.approx(9.74, abs=0.10)

    def test_subsampled_branches_track_full_enumeration(
        self, reference_model, small_algo
    ):
        payoff = PayoffSpec(kind=PayoffKind.GEO_CALL_SPREAD, K1=90.0, K2=110.0)
        model = reference_model(8, rho_min=0.0, rho_max=0.0)
        full = price(model, payoff, small_algo(N=8, P=64)).value
        subsampled = price(model, payoff, small_algo(N=8, P=64, M=64)).value
        assert subsampled == pytest.approx(full, abs=0.10)

    def test_variable_correlation_spread_beats_fixed_correlation(
        self, reference_model, small_algo
    ):
        payoff = PayoffSpec(kind=PayoffKind.OUTPERFORMER_SPREAD)
        algo = small_algo(N=32, P=500)
        variable = price(reference_model(2), payoff, algo).value
        assert variable == pytest.approx(12.72, abs=0.15)
        for rho in (-0.5, 0.0, 0.5):
            model = reference_model(2, rho_min=rho, rho_max=rho)
            assert variable > price(model, payoff, algo).value

    def test_geo_outperformer_three_assets(self, reference_model, small_algo):
        payoff = PayoffSpec(kind=PayoffKind.GEO_OUTPERFORMER)
        report = price(reference_model(3), payoff, small_algo(N=32, P=500))
        assert report.value == pytest.approx(12.98, abs=0.15)

    def test_call_sharpe(self, reference_model, small_algo):
        payoff = PayoffSpec(kind=PayoffKind.CALL_SHARPE, K=100.0, n_monitoring=12)
        report = price(reference_model(1), payoff, small_algo(N=48, P=1000))
        assert report.value == pytest.approx(57.14, abs=1.5)


def test_stream_seeds_are_reproducible_and_distinct():
    assert pricer.stream_seed(2024, 3, 7) == pricer.stream_seed(2024, 3, 7)
    assert pricer.stream_seed(2024, 3, 7) != pricer.stream_seed(2024, 3, 8)
