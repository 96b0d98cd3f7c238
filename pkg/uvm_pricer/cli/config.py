"""Experiment files: flat dotted keys in YAML, scalars broadcast to vectors.

Example::

    mode: sweep
    model.d: 2
    model.rho_min: -0.5
    model.rho_max: -0.5
    payoff.kind: Outperformer
    algo.N: [16, 32]
    algo.P: [125, 250]
    output.format: csv
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from uvm_pricer.config import (
    BENCH_TREE_STEPS,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    GEO_OUTPERFORMER_BENCH,
    MONTHS_PER_YEAR,
    REFERENCE_MARKET,
)
from uvm_pricer.errors import ConfigError
from uvm_pricer.models import AlgoParams, ModelSpec, PayoffSpec, SqpConfig
from uvm_pricer.numerics.correlation import n_pairs
from uvm_pricer.numerics.gpr import KernelKind

logger = logging.getLogger(__name__)

_PER_ASSET = ("S0", "eta", "sigma_min", "sigma_max")
_PER_PAIR = ("rho_min", "rho_max")
_SECTIONS = ("model", "payoff", "algo", "output", "bench")
_MODEL_DEFAULTS = (
    "S0",
    "r",
    "eta",
    "sigma_min",
    "sigma_max",
    "rho_min",
    "rho_max",
    "T",
)


class AlgoGrid(BaseModel):
    """Algorithm settings, with N and P possibly listing several sweep values."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    N: List[int] = Field(..., min_length=1, description="Time steps, one or more")
    P: List[int] = Field(..., min_length=1, description="Grid points, one or more")
    M: Optional[int] = Field(None, description="Tree branches per point")
    seed: int = Field(DEFAULT_SEED, description="Master seed")
    kernel: Optional[KernelKind] = None
    workers: int = Field(
        DEFAULT_WORKERS, ge=1, description="Ray workers for per-point solves"
    )
    sqp: SqpConfig = Field(default_factory=SqpConfig)

    @field_validator("N", "P", mode="before")
    @classmethod
    def listify(cls, v):
        return v if isinstance(v, list) else [v]

    def params(self, N: int, P: int) -> AlgoParams:
        return AlgoParams(
            N=N,
            P=P,
            M=self.M,
            seed=self.seed,
            kernel=self.kernel,
            workers=self.workers,
            sqp=self.sqp,
        )


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = Field(
        None, description="Table destination, stdout when omitted"
    )
    format: Literal["csv", "json"] = "csv"
    timings: bool = Field(True, description="Include wall-clock columns")


class BenchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    steps: int = Field(
        BENCH_TREE_STEPS, ge=1, description="Lattice steps of 1-D benchmarks"
    )
    N: int = Field(
        GEO_OUTPERFORMER_BENCH["N"],
        ge=1,
        description="Engine steps of the geo-outperformer benchmark",
    )
    P: int = Field(
        GEO_OUTPERFORMER_BENCH["P"],
        ge=1,
        description="Engine points of the geo-outperformer benchmark",
    )


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["price", "sweep", "bench"] = "price"
    model: ModelSpec
    payoff: PayoffSpec
    algo: AlgoGrid
    output: OutputConfig = Field(default_factory=OutputConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)

    def cells(self) -> List[AlgoParams]:
        return [self.algo.params(N, P) for N in self.algo.N for P in self.algo.P]


def flatten(tree: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested mappings to dotted keys; already-dotted keys pass through."""
    flat: Dict[str, Any] = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def nest(section: Dict[str, Any]) -> Dict[str, Any]:
    """Inverse of ``flatten`` within one section.

    'sqp.max_iters' becomes {'sqp': {'max_iters': ...}}.
    """
    nested: Dict[str, Any] = {}
    for key, value in section.items():
        *parents, leaf = key.split(".")
        node = nested
        for parent in parents:
            node = node.setdefault(parent, {})
        node[leaf] = value
    return nested


def parse_override(item: str) -> Dict[str, Any]:
    if "=" not in item:
        raise ConfigError("bad_override", f"expected key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError("bad_override", f"cannot parse value of {key}: {e}") from e
    return {key.strip(): value}


def _broadcast_model(section: Dict[str, Any]) -> Dict[str, Any]:
    merged = {key: REFERENCE_MARKET[key] for key in _MODEL_DEFAULTS}
    merged.update(section)
    if "d" not in merged:
        raise ConfigError("missing_field", "model.d is required")
    try:
        d = int(merged["d"])
    except (TypeError, ValueError) as e:
        raise ConfigError("invalid_config", f"model.d: {e}") from e
    for key in _PER_ASSET:
        if not isinstance(merged[key], list):
            merged[key] = [merged[key]] * d
    for key in _PER_PAIR:
        if not isinstance(merged[key], list):
            merged[key] = [merged[key]] * n_pairs(d)
    return merged


def _payoff_defaults(section: Dict[str, Any], model: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(section)
    kind = merged.get("kind")
    if kind in ("Call", "CallSharpe"):
        merged.setdefault("K", REFERENCE_MARKET["K"])
    if kind == "GeoCallSpread":
        merged.setdefault("K1", REFERENCE_MARKET["K1"])
        merged.setdefault("K2", REFERENCE_MARKET["K2"])
    if kind == "CallSharpe":
        merged.setdefault("n_monitoring", round(MONTHS_PER_YEAR * float(model["T"])))
    return merged


def build_config(flat: Dict[str, Any]) -> ExperimentConfig:
    sections: Dict[str, Dict[str, Any]] = {name: {} for name in _SECTIONS}
    top: Dict[str, Any] = {}
    for key, value in flat.items():
        head, _, rest = key.partition(".")
        if head in sections and rest:
            sections[head][rest] = value
        elif not rest and head not in sections:
            top[key] = value
        else:
            raise ConfigError("unknown_key", f"unknown configuration key {key!r}")

    model = _broadcast_model(sections["model"])
    try:
        cfg = ExperimentConfig(
            **top,
            model=model,
            payoff=_payoff_defaults(sections["payoff"], model),
            algo=nest(sections["algo"]),
            output=sections["output"],
            bench=sections["bench"],
        )
        cfg.cells()
    except ValidationError as e:
        fields = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError("invalid_config", fields) from e
    try:
        cfg.payoff.check_model(cfg.model)
    except ValueError as e:
        raise ConfigError("invalid_config", str(e)) from e
    _check_cells(cfg)
    return cfg


def _check_cells(cfg: ExperimentConfig) -> None:
    d, payoff = cfg.model.d, cfg.payoff
    for algo in cfg.cells():
        if payoff.path_dependent:
            if algo.N % payoff.n_monitoring:
                raise ConfigError(
                    "invalid_config",
                    f"algo.N={algo.N} is not a multiple of N_m={payoff.n_monitoring}",
                )
        elif algo.branches_for(d) > 2**d:
            raise ConfigError("invalid_config", f"algo.M={algo.M} exceeds 2^d={2**d}")


def load_config(
    path: Optional[Union[str, Path]], overrides: Iterable[str] = ()
) -> ExperimentConfig:
    """Read ``path`` (may be None for overrides only), apply ``key=value`` overrides,
    validate."""
    flat: Dict[str, Any] = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as e:
            raise ConfigError("unreadable_config", f"cannot read {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError("invalid_yaml", f"{path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("invalid_yaml", f"{path} must hold a mapping")
        flat.update(flatten(raw))
    for item in overrides:
        flat.update(parse_override(item))
    logger.debug("Resolved configuration keys", extra={"keys": sorted(flat)})
    return build_config(flat)
