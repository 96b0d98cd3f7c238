"""Reductions of multi-asset contracts to one-dimensional lattice problems.

Also holds the fixed-correlation benchmark of the geometric outperformer.
"""

import logging
from itertools import product
from typing import Optional

import numpy as np

from uvm_pricer.bench.lattice import DividendRule, Reduced1D, Vertical1D
from uvm_pricer.engine.pricer import price
from uvm_pricer.errors import ReductionError
from uvm_pricer.models import AlgoParams, ModelSpec, PayoffKind, PayoffSpec, PriceReport
from uvm_pricer.numerics.correlation import gamma_from_rho, is_psd, pair_indices

logger = logging.getLogger(__name__)


def exchange_vol(sigma1: float, sigma2: float, rho: float) -> float:
    """Volatility of S²/S¹."""
    return float(np.sqrt(sigma1**2 + sigma2**2 - 2.0 * rho * sigma1 * sigma2))


def numeraire_reduce(
    model: ModelSpec, payoff: PayoffSpec, rho_fixed: float
) -> Reduced1D:
    """Price the two-asset exchange contracts in units of S¹.

    With ρ ≤ 0 the ratio volatility grows in both σ₁ and σ₂, so its range over
    the σ-box is attained at the box corners.
    """
    if model.d != 2:
        raise ReductionError(
            "unsupported_dimension", f"numeraire reduction needs d=2, got {model.d}"
        )
    if model.r != 0.0 or any(eta != 0.0 for eta in model.eta):
        raise ReductionError(
            "unsupported_rates", "numeraire reduction assumes r = 0 and no dividends"
        )
    if rho_fixed > 0.0:
        raise ReductionError(
            "positive_correlation",
            f"numeraire reduction needs rho <= 0, got {rho_fixed}",
        )

    if payoff.kind == PayoffKind.OUTPERFORMER:
        payoff1d = Vertical1D(lower=1.0, scale=model.S0[0])
    elif payoff.kind == PayoffKind.OUTPERFORMER_SPREAD:
        payoff1d = Vertical1D(lower=payoff.lo, upper=payoff.hi, scale=model.S0[0])
    else:
        raise ReductionError(
            "unsupported_payoff", f"no numeraire reduction for {payoff.kind.value}"
        )

    first = (model.sigma_min[0], model.sigma_max[0])
    second = (model.sigma_min[1], model.sigma_max[1])
    corners = [exchange_vol(s1, s2, rho_fixed) for s1, s2 in product(first, second)]
    return Reduced1D(
        y0=model.S0[1] / model.S0[0],
        vol_min=min(corners),
        vol_max=max(corners),
        div=DividendRule(),
        payoff1d=payoff1d,
        r=0.0,
        T=model.T,
        description=f"{payoff.kind.value} in units of S1, rho={rho_fixed}",
    )


def geo_reduce(model: ModelSpec, K1: float, K2: Optional[float] = None) -> Reduced1D:
    """Geometric mean of independent assets as a single asset.

    Its dividend depends on its own volatility,
    η̂(σ̂) = mean(η) + ((d−1)/2)·σ̂².
    """
    if any(lo != 0.0 or hi != 0.0 for lo, hi in zip(model.rho_min, model.rho_max)):
        raise ReductionError(
            "nonzero_correlation",
            "geometric reduction needs all correlations fixed at 0",
        )
    d = model.d
    return Reduced1D(
        y0=float(np.exp(np.mean(np.log(model.S0)))),
        vol_min=float(np.sqrt(np.sum(np.square(model.sigma_min))) / d),
        vol_max=float(np.sqrt(np.sum(np.square(model.sigma_max))) / d),
        div=DividendRule(base=float(np.mean(model.eta)), variance_coef=0.5 * (d - 1)),
        payoff1d=Vertical1D(lower=K1, upper=np.inf if K2 is None else K2),
        r=model.r,
        T=model.T,
        description=f"geometric mean of {d} assets",
    )


def optimal_geo_correlations(model: ModelSpec) -> np.ndarray:
    """Lowest correlation between asset 1 and the rest, highest among the rest."""
    iu, _ = pair_indices(model.d)
    return np.where(iu == 0, model.rho_min, model.rho_max)


def geo_outperformer_benchmark(
    model: ModelSpec, N: int, P: int, algo: Optional[AlgoParams] = None
) -> PriceReport:
    """Engine price of the geometric outperformer with correlations fixed at their
    optimal values and only the volatilities uncertain.
    """
    rho = optimal_geo_correlations(model)
    if not is_psd(gamma_from_rho(rho, model.d)):
        raise ReductionError(
            "indefinite_correlation",
            f"the optimal correlation matrix is not PSD for d={model.d}",
        )
    settings = (algo or AlgoParams(N=N, P=P)).model_copy(update={"N": N, "P": P})
    logger.info("Geo-outperformer benchmark", extra={"d": model.d, "N": N, "P": P})
    payoff = PayoffSpec(kind=PayoffKind.GEO_OUTPERFORMER)
    return price(model.fixed(rho=rho.tolist()), payoff, settings)
