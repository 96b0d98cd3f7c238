"""Backward induction for the worst-case price.

For n = N-1 … 1 the worst-case one-step value is solved at every grid state,
then a GPR is fitted on (state, value) and becomes the continuation of step
n-1. At n = 0 a single solve at the spot gives the price.
"""

import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from uvm_pricer.engine.continuation import (
    BasketObjective,
    GprContinuation,
    PayoffContinuation,
    SharpeObjective,
)
from uvm_pricer.engine.dispatch import solve_all
from uvm_pricer.engine.grid import GridSlice, build_grid, mc_grid
from uvm_pricer.errors import (
    BranchError,
    NumericalFailure,
    PayoffError,
    PricingError,
)
from uvm_pricer.models import (
    AlgoParams,
    GprSummary,
    ModelSpec,
    PayoffSpec,
    PriceReport,
    StepDiagnostics,
)
from uvm_pricer.numerics import gpr
from uvm_pricer.numerics.correlation import pair_indices
from uvm_pricer.numerics.gpr import GprModel, KernelKind
from uvm_pricer.numerics.lowdisc import HaltonState
from uvm_pricer.numerics.sqp import ParameterBox, UvmPoint, maximize
from uvm_pricer.numerics.treestep import Continuation, make_branches

logger = logging.getLogger(__name__)

# Stream tag for the GPR optimizer restarts
GPR_SEED_TAG = 2


class PointSolution(NamedTuple):
    value: float
    point: UvmPoint
    iterations: int


def start_point(model: ModelSpec) -> UvmPoint:
    """(σ^avg, ρ^avg), with the correlations taken from the repaired Γ^avg."""
    box = ParameterBox.from_model(model)
    if model.d > 1:
        iu, ju = pair_indices(model.d)
        rho = model.gamma_avg()[iu, ju]
    else:
        rho = np.empty(0)
    vector = np.clip(np.concatenate([model.sigma_avg, rho]), box.lower, box.upper)
    return UvmPoint.from_vector(vector, model.d)


def stream_seed(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def point_value(
    x: np.ndarray,
    n: int,
    model: ModelSpec,
    payoff: PayoffSpec,
    continuation: Continuation,
    algo: AlgoParams,
    p: int = 0,
) -> PointSolution:
    """Worst-case discounted one-step expectation from state ``x`` at t_n."""
    x = np.asarray(x, dtype=float)
    dt = model.T / algo.N
    if payoff.path_dependent:
        objective = SharpeObjective(
            x=x,
            n=n,
            N=algo.N,
            n_monitoring=payoff.n_monitoring,
            dt=dt,
            model=model,
            continuation=continuation,
        )
    else:
        if x.size != model.d:
            raise PayoffError(
                "dimension_mismatch",
                f"state has {x.size} entries, model has d={model.d}",
            )
        # branch subsample frozen for the whole optimisation at (n, p)
        M = algo.branches_for(model.d)
        branches = make_branches(model.d, M, stream_seed(algo.seed, n, p))
        objective = BasketObjective(
            x=x, dt=dt, model=model, branches=branches, continuation=continuation
        )

    box = ParameterBox.from_model(model)
    result = maximize(objective, box, start_point(model), algo.sqp)
    return PointSolution(result.value, result.point, result.iterations)


@dataclass(frozen=True)
class StepTask:
    """Everything a worker needs to solve grid points of one time step."""

    n: int
    points: np.ndarray
    model: ModelSpec
    payoff: PayoffSpec
    continuation: Continuation
    algo: AlgoParams


def solve_chunk(task: StepTask, indices: Sequence[int]) -> List[PointSolution]:
    solutions = []
    for p in indices:
        try:
            solution = point_value(
                task.points[p],
                task.n,
                task.model,
                task.payoff,
                task.continuation,
                task.algo,
                p,
            )
        except Exception as e:
            logger.error(
                f"Point solve failed: {e}",
                extra={"n": task.n, "p": int(p)},
                exc_info=True,
            )
            raise NumericalFailure(task.n, int(p), e) from e
        logger.debug(
            "Solved grid point",
            extra={
                "n": task.n,
                "p": int(p),
                "value": solution.value,
                "iterations": solution.iterations,
            },
        )
        solutions.append(solution)
    return solutions


def kernel_for(payoff: PayoffSpec, algo: AlgoParams) -> KernelKind:
    if algo.kernel is not None:
        return algo.kernel
    return KernelKind.MATERN32_ARD if payoff.path_dependent else KernelKind.MATERN32


def _summary(model: GprModel) -> GprSummary:
    return GprSummary(
        signal_std=model.kernel.signal_std,
        length_scales=list(model.kernel.length_scales),
        noise_std=model.noise_std,
        log_marginal_likelihood=model.log_marginal_likelihood,
        jitter=model.jitter,
    )


def _spot_state(
    model: ModelSpec, payoff: PayoffSpec, width: Optional[int] = None
) -> np.ndarray:
    """Today's state: the spot vector, or (S0, 0[, S0]) for path states."""
    if not payoff.path_dependent:
        return np.asarray(model.S0, dtype=float)
    state = [model.S0[0], 0.0]
    if width == 3:
        state.append(model.S0[0])
    return np.asarray(state)


def _slice_points(
    model: ModelSpec, payoff: PayoffSpec, algo: AlgoParams, n: int, paths
) -> np.ndarray:
    if payoff.path_dependent:
        return paths[n]
    # Every slice maps the same Halton points h^1..h^P
    return build_grid(model, n, algo.P, HaltonState(model.d), N=algo.N)


def price(model: ModelSpec, payoff: PayoffSpec, algo: AlgoParams) -> PriceReport:
    """Worst-case price at t = 0 with per-step timings and diagnostics."""
    try:
        payoff.check_model(model)
    except ValueError as e:
        raise PayoffError("invalid_contract", str(e)) from e
    if not payoff.path_dependent and algo.branches_for(model.d) > 2**model.d:
        raise BranchError(
            "branch_count_out_of_range", f"M={algo.M} exceeds 2^d={2**model.d}"
        )

    started = time.perf_counter()
    kind = kernel_for(payoff, algo)
    paths = None
    if payoff.path_dependent:
        paths = mc_grid(model, algo.N, algo.P, algo.seed, payoff.n_monitoring)
    continuation: Continuation = PayoffContinuation(payoff, model.T)
    steps: List[StepDiagnostics] = []
    first_slice: Optional[GridSlice] = None

    logger.info(
        f"Pricing {payoff.kind.value}",
        extra={
            "d": model.d,
            "N": algo.N,
            "P": algo.P,
            "M": algo.branches_for(model.d),
            "workers": algo.workers,
        },
    )
    for n in range(algo.N - 1, 0, -1):
        step_started = time.perf_counter()
        points = _slice_points(model, payoff, algo, n, paths)
        task = StepTask(
            n=n,
            points=points,
            model=model,
            payoff=payoff,
            continuation=continuation,
            algo=algo,
        )
        solutions = solve_all(solve_chunk, task, len(points), algo.workers)
        values = np.array([s.value for s in solutions])
        iterations = np.array([s.iterations for s in solutions])

        try:
            regression = gpr.fit(
                points,
                values,
                kind,
                random_state=stream_seed(algo.seed, GPR_SEED_TAG, n, 0),
            )
        except PricingError:
            logger.error("GPR fit failed", extra={"n": n}, exc_info=True)
            raise
        continuation = GprContinuation(regression)
        if n == 1:
            first_slice = GridSlice(n=n, points=points, values=values, model=regression)

        seconds = time.perf_counter() - step_started
        steps.append(
            StepDiagnostics(
                n=n,
                seconds=seconds,
                points=len(points),
                mean_sqp_iterations=float(iterations.mean()),
                max_sqp_iterations=int(iterations.max()),
                gpr=_summary(regression),
            )
        )
        logger.info(
            f"Finished step n={n}",
            extra={
                "n": n,
                "seconds": round(seconds, 3),
                "mean_value": float(values.mean()),
            },
        )

    step_started = time.perf_counter()
    root_task = StepTask(
        n=0,
        points=_spot_state(model, payoff)[None, :],
        model=model,
        payoff=payoff,
        continuation=continuation,
        algo=algo,
    )
    root = solve_chunk(root_task, [0])[0]
    steps.append(
        StepDiagnostics(
            n=0,
            seconds=time.perf_counter() - step_started,
            points=1,
            mean_sqp_iterations=float(root.iterations),
            max_sqp_iterations=root.iterations,
        )
    )

    diagnostics: Dict[str, Any] = {
        "kernel": kind.value,
        "branches": 2 if payoff.path_dependent else algo.branches_for(model.d),
        "grid": "monte_carlo" if payoff.path_dependent else "halton",
    }
    if first_slice is not None:
        anchor = _spot_state(model, payoff, first_slice.model.dim)
        diagnostics["gpr_band_t1"] = {
            "mean": gpr.predict_mean(first_slice.model, anchor),
            "std": float(np.sqrt(gpr.predict_var(first_slice.model, anchor))),
        }

    total = time.perf_counter() - started
    logger.info(
        f"Worst-case price {root.value:.6f}", extra={"seconds": round(total, 3)}
    )
    return PriceReport(
        value=root.value,
        total_seconds=total,
        steps=steps,
        sigma_star=root.point.sigma.tolist(),
        rho_star=root.point.rho.tolist(),
        diagnostics=diagnostics,
    )
