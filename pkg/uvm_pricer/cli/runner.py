"""Batch modes: a single price, an N×P sweep, or engine-versus-benchmark tables."""

import logging
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from uvm_pricer.bench import LITERATURE
from uvm_pricer.bench.black_scholes import bs_price
from uvm_pricer.bench.lattice import DividendRule, Reduced1D, Vertical1D, uvm_tree_1d
from uvm_pricer.bench.reductions import (
    geo_outperformer_benchmark,
    geo_reduce,
    numeraire_reduce,
)
from uvm_pricer.cli.config import ExperimentConfig, load_config
from uvm_pricer.cli.output import config_hash, write_table
from uvm_pricer.config import REFERENCE_MARKET
from uvm_pricer.engine.pricer import price
from uvm_pricer.errors import (
    ConfigError,
    NumericalFailure,
    PricingError,
    ReductionError,
)
from uvm_pricer.models import AlgoParams, PayoffKind, PriceReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _join(values: Iterable[float], digits: int = 6) -> str:
    return ";".join(f"{v:.{digits}f}" for v in values)


def report_row(
    cfg: ExperimentConfig, algo: AlgoParams, report: PriceReport, digest: str
) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "mode": cfg.mode,
        "payoff": cfg.payoff.kind.value,
        "d": cfg.model.d,
        "N": algo.N,
        "P": algo.P,
        "M": algo.branches_for(cfg.model.d),
        "seed": algo.seed,
        "value": report.value,
        "sigma_star": _join(report.sigma_star),
        "rho_star": _join(report.rho_star),
    }
    band = report.diagnostics.get("gpr_band_t1")
    row["gpr_band_mean"] = band["mean"] if band else np.nan
    row["gpr_band_std"] = band["std"] if band else np.nan
    if cfg.output.timings:
        row["seconds"] = round(report.total_seconds, 3)
        row["step_seconds"] = _join(sorted_steps_seconds(report), digits=3)
    row["config_hash"] = digest
    return row


def sorted_steps_seconds(report: PriceReport) -> List[float]:
    """Per-step seconds ordered by time index t_0, t_1, …."""
    return [step.seconds for step in sorted(report.steps, key=lambda step: step.n)]


def _fixed_rho(cfg: ExperimentConfig) -> Optional[float]:
    lo, hi = cfg.model.rho_min, cfg.model.rho_max
    if len(lo) == 1 and lo[0] == hi[0]:
        return lo[0]
    return None


def _is_reference_market(cfg: ExperimentConfig) -> bool:
    m = cfg.model
    return (
        all(s == REFERENCE_MARKET["S0"] for s in m.S0)
        and all(s == REFERENCE_MARKET["sigma_min"] for s in m.sigma_min)
        and all(s == REFERENCE_MARKET["sigma_max"] for s in m.sigma_max)
        and m.r == REFERENCE_MARKET["r"]
        and m.T == REFERENCE_MARKET["T"]
    )


def literature_value(cfg: ExperimentConfig) -> Optional[float]:
    """Published reference for the reference market, when one exists."""
    if not _is_reference_market(cfg):
        return None
    kind, rho = cfg.payoff.kind, _fixed_rho(cfg)
    if kind == PayoffKind.CALL_SHARPE:
        return LITERATURE["call_sharpe_mc"]
    if kind == PayoffKind.OUTPERFORMER and rho == -0.5:
        return LITERATURE["outperformer_rho_minus_half_mc"]
    if kind == PayoffKind.OUTPERFORMER and rho == 0.0:
        return LITERATURE["outperformer_rho_zero_mc"]
    if kind == PayoffKind.OUTPERFORMER_SPREAD and rho == -0.5:
        return LITERATURE["outperformer_spread_rho_minus_half_mc"]
    if kind == PayoffKind.OUTPERFORMER_SPREAD and rho is None:
        return LITERATURE["outperformer_spread_variable_rho_mc"]
    return None


def benchmark_value(cfg: ExperimentConfig) -> Tuple[str, Optional[float]]:
    """(method, value) of the independent benchmark for this contract."""
    model, payoff, steps = cfg.model, cfg.payoff, cfg.bench.steps
    try:
        if payoff.kind == PayoffKind.CALL:
            if model.sigma_min == model.sigma_max:
                value = bs_price(
                    model.S0[0],
                    payoff.K,
                    model.r,
                    model.eta[0],
                    model.sigma_max[0],
                    model.T,
                )
                return "black_scholes", value
            reduced = Reduced1D(
                y0=model.S0[0],
                vol_min=model.sigma_min[0],
                vol_max=model.sigma_max[0],
                div=DividendRule(base=model.eta[0]),
                payoff1d=Vertical1D(lower=payoff.K),
                r=model.r,
                T=model.T,
            )
            return "lattice", uvm_tree_1d(reduced, steps)
        if payoff.kind in (PayoffKind.OUTPERFORMER, PayoffKind.OUTPERFORMER_SPREAD):
            rho = _fixed_rho(cfg)
            if rho is None:
                return "none", None
            reduced = numeraire_reduce(model, payoff, rho)
            return "numeraire_lattice", uvm_tree_1d(reduced, steps)
        if payoff.kind == PayoffKind.GEO_CALL_SPREAD:
            reduced = geo_reduce(model, payoff.K1, payoff.K2)
            return "geometric_lattice", uvm_tree_1d(reduced, steps)
        if payoff.kind == PayoffKind.GEO_OUTPERFORMER:
            settings = cfg.algo.params(cfg.bench.N, cfg.bench.P)
            report = geo_outperformer_benchmark(
                model, cfg.bench.N, cfg.bench.P, settings
            )
            return "fixed_optimal_correlation", report.value
    except ReductionError as e:
        logger.warning(f"No benchmark: {e.message}", extra={"reason": e.name})
        return "none", None
    return "literature_pde", LITERATURE["call_sharpe_pde"]


def _gap(value: float, reference: Optional[float]) -> Tuple[float, float]:
    if reference is None:
        return np.nan, np.nan
    gap = value - reference
    return gap, gap / reference if reference else np.nan


def execute(cfg: ExperimentConfig) -> pd.DataFrame:
    """Run every cell of ``cfg`` and return the result table."""
    if cfg.mode == "price" and (len(cfg.algo.N) > 1 or len(cfg.algo.P) > 1):
        raise ConfigError(
            "invalid_config", "mode price takes a single algo.N and algo.P; use sweep"
        )

    digest = config_hash(cfg)
    benchmark: Tuple[str, Optional[float]] = ("none", None)
    literature: Optional[float] = None
    if cfg.mode == "bench":
        benchmark = benchmark_value(cfg)
        literature = literature_value(cfg)
        logger.info(
            f"Benchmark {benchmark[0]}: {benchmark[1]}",
            extra={"literature": literature},
        )

    rows = []
    for algo in cfg.cells():
        report = price(cfg.model, cfg.payoff, algo)
        row = report_row(cfg, algo, report, digest)
        if cfg.mode == "bench":
            method, reference = benchmark
            row["benchmark_method"] = method
            row["benchmark"] = np.nan if reference is None else reference
            row["abs_gap"], row["rel_gap"] = _gap(report.value, reference)
            row["literature"] = np.nan if literature is None else literature
            row["literature_gap"], _ = _gap(report.value, literature)
        rows.append(row)
        logger.info(
            f"Cell N={algo.N} P={algo.P}: {report.value:.4f}",
            extra={"mode": cfg.mode},
        )
    return pd.DataFrame(rows)


def run(config_path: Optional[str], overrides: Iterable[str] = ()) -> int:
    """Load, run and write; returns the process exit code."""
    try:
        cfg = load_config(config_path, overrides)
        table = execute(cfg)
        write_table(table, cfg.output.path, cfg.output.format)
    except ConfigError as e:
        logger.error(
            f"Invalid configuration: {e.message}", extra={"error_type": e.name}
        )
        return EXIT_CONFIG
    except NumericalFailure as e:
        logger.error(
            f"Numerical failure at n={e.n}, p={e.p}: {e.cause}",
            extra={"error_type": e.name},
        )
        return EXIT_NUMERICAL
    except PricingError as e:
        logger.error(
            f"Pricing failed: {e.message}",
            extra={"error_type": e.name},
            exc_info=True,
        )
        return EXIT_NUMERICAL
    return EXIT_OK
