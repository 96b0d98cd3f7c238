"""Market states X^n at which the worst-case value is computed."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from uvm_pricer.errors import GridError
from uvm_pricer.models import ModelSpec
from uvm_pricer.numerics.correlation import sqrt_gamma
from uvm_pricer.numerics.gpr import GprModel
from uvm_pricer.numerics.lowdisc import HaltonState, inv_norm_cdf

logger = logging.getLogger(__name__)

# Stream tag for the Monte Carlo paths of path-dependent contracts
MC_GRID_TAG = 1


@dataclass
class GridSlice:
    """States at t_n, their worst-case values, and the regression fitted on them.

    ``model`` is None for the terminal slice, whose continuation is the payoff.
    """

    n: int
    points: np.ndarray
    values: np.ndarray
    model: Optional[GprModel] = None


def build_grid(
    model: ModelSpec, n: int, P: int, halton: HaltonState, *, N: int
) -> np.ndarray:
    """P quasi-random spot vectors at t_n = n·T/N.

    Lognormal at the average volatilities and the repaired average correlation.
    """
    if n < 1 or n > N:
        raise GridError("bad_time_index", f"grid index must lie in [1, {N}], got {n}")
    if halton.dimension != model.d:
        raise GridError(
            "dimension_mismatch",
            f"Halton dimension {halton.dimension} != d={model.d}",
        )
    t_n = n * model.T / N
    sigma = model.sigma_avg
    z = inv_norm_cdf(halton.take(P)) @ sqrt_gamma(model.gamma_avg()).T
    drift = (model.r - np.asarray(model.eta) - 0.5 * sigma**2) * t_n
    return np.asarray(model.S0)[None, :] * np.exp(drift + sigma * np.sqrt(t_n) * z)


def is_monitoring(n: int, N: int, n_monitoring: int) -> bool:
    return n % (N // n_monitoring) == 0


def mc_grid(
    model: ModelSpec, N: int, P: int, seed: int, n_monitoring: int
) -> List[np.ndarray]:
    """Path states for t_0..t_N from P simulated paths at σ^avg.

    Entry n has rows (S, A1) on monitoring dates and (S, A1, A2) otherwise.
    A1 sums squared monthly log-returns and A2 is the spot at the last
    monitoring date.
    """
    if model.d != 1:
        raise GridError(
            "dimension_mismatch", f"path grids are single-asset, got d={model.d}"
        )
    if N % n_monitoring:
        raise GridError(
            "unaligned_monitoring",
            f"N={N} is not a multiple of N_m={n_monitoring}",
        )

    dt = model.T / N
    sigma = float(model.sigma_avg[0])
    drift = (model.r - model.eta[0] - 0.5 * sigma**2) * dt
    rng = np.random.default_rng(np.random.SeedSequence([seed, MC_GRID_TAG]))
    shocks = rng.standard_normal((N, P))

    spot = np.full(P, model.S0[0])
    a1 = np.zeros(P)
    last_fixing = spot.copy()
    slices = [np.column_stack([spot, a1])]
    for n in range(1, N + 1):
        spot = spot * np.exp(drift + sigma * np.sqrt(dt) * shocks[n - 1])
        if is_monitoring(n, N, n_monitoring):
            a1 = a1 + np.log(spot / last_fixing) ** 2
            last_fixing = spot.copy()
            slices.append(np.column_stack([spot, a1]))
        else:
            slices.append(np.column_stack([spot, a1, last_fixing]))
    logger.debug("Simulated path grid", extra={"N": N, "P": P, "seed": seed})
    return slices
