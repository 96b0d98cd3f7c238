from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from uvm_pricer.config import MONTHS_PER_YEAR, PSD_TOL, REFERENCE_MARKET
from uvm_pricer.numerics.correlation import (
    CorrParams,
    build_gamma,
    is_psd,
    n_pairs,
    nearest_psd,
)
from uvm_pricer.numerics.gpr import KernelKind


class ModelSpec(BaseModel):
    """Market data plus the uncertainty box on volatilities and correlations."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(..., ge=1, description="Number of underlying assets")
    S0: List[float] = Field(..., description="Spot vector (currency)")
    r: float = Field(0.0, description="Risk-free rate (1/year)")
    eta: List[float] = Field(..., description="Dividend yields (1/year)")
    sigma_min: List[float] = Field(..., description="Lower volatility bounds")
    sigma_max: List[float] = Field(..., description="Upper volatility bounds")
    rho_min: List[float] = Field(
        default_factory=list,
        description="Lower correlation bounds, pairs (i<j) in lexicographic order",
    )
    rho_max: List[float] = Field(
        default_factory=list, description="Upper correlation bounds, same ordering"
    )
    T: float = Field(..., gt=0, description="Maturity (years)")

    @model_validator(mode="after")
    def check_shapes_and_bounds(self):
        d = self.d
        for name in ("S0", "eta", "sigma_min", "sigma_max"):
            if len(getattr(self, name)) != d:
                raise ValueError(f"{name} must have {d} entries")
        for name in ("rho_min", "rho_max"):
            if len(getattr(self, name)) != n_pairs(d):
                raise ValueError(
                    f"{name} must have {n_pairs(d)} entries for d={d}"
                )
        if any(s <= 0 for s in self.S0):
            raise ValueError("S0 must be positive componentwise")
        for lo, hi in zip(self.sigma_min, self.sigma_max):
            if not 0 < lo <= hi:
                raise ValueError(
                    "volatility bounds must satisfy 0 < sigma_min <= sigma_max"
                )
        for lo, hi in zip(self.rho_min, self.rho_max):
            if not -1.0 <= lo <= hi <= 1.0:
                raise ValueError(
                    "correlation bounds must satisfy -1 <= rho_min <= rho_max <= 1"
                )
        return self

    @classmethod
    def uniform(
        cls,
        d: int,
        *,
        S0: float = REFERENCE_MARKET["S0"],
        r: float = REFERENCE_MARKET["r"],
        eta: float = REFERENCE_MARKET["eta"],
        sigma_min: float = REFERENCE_MARKET["sigma_min"],
        sigma_max: float = REFERENCE_MARKET["sigma_max"],
        rho_min: float = REFERENCE_MARKET["rho_min"],
        rho_max: float = REFERENCE_MARKET["rho_max"],
        T: float = REFERENCE_MARKET["T"],
    ) -> "ModelSpec":
        """Same bounds for every asset and every pair."""
        k = n_pairs(d)
        return cls(
            d=d,
            S0=[S0] * d,
            r=r,
            eta=[eta] * d,
            sigma_min=[sigma_min] * d,
            sigma_max=[sigma_max] * d,
            rho_min=[rho_min] * k,
            rho_max=[rho_max] * k,
            T=T,
        )

    @property
    def sigma_avg(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.sigma_min) + np.asarray(self.sigma_max))

    @property
    def rho_avg(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.rho_min) + np.asarray(self.rho_max))

    def gamma_avg(self) -> np.ndarray:
        """Γ at the midpoint correlations, projected onto the PSD cone if needed."""
        gamma = build_gamma(CorrParams(d=self.d, rho=tuple(self.rho_avg)))
        if not is_psd(gamma, PSD_TOL):
            gamma = nearest_psd(gamma)
        return gamma

    def fixed(
        self,
        sigma: Optional[List[float]] = None,
        rho: Optional[List[float]] = None,
    ) -> "ModelSpec":
        """Copy with degenerate bounds at the given parameters."""
        update: Dict[str, Any] = {}
        if sigma is not None:
            update.update(sigma_min=list(sigma), sigma_max=list(sigma))
        if rho is not None:
            update.update(rho_min=list(rho), rho_max=list(rho))
        return self.model_validate({**self.model_dump(), **update})


class PayoffKind(str, Enum):
    """Option contracts the engine can price."""

    CALL = "Call"
    OUTPERFORMER = "Outperformer"
    OUTPERFORMER_SPREAD = "OutperformerSpread"
    GEO_CALL_SPREAD = "GeoCallSpread"
    GEO_OUTPERFORMER = "GeoOutperformer"
    CALL_SHARPE = "CallSharpe"


class PayoffSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: PayoffKind = Field(..., description="Contract type")
    K: Optional[float] = Field(None, gt=0, description="Strike for Call / CallSharpe")
    K1: Optional[float] = Field(
        None, gt=0, description="Long call strike (GeoCallSpread)"
    )
    K2: Optional[float] = Field(
        None, gt=0, description="Short call strike (GeoCallSpread)"
    )
    lo: float = Field(0.9, gt=0, description="Lower ratio of the outperformer spread")
    hi: float = Field(1.1, gt=0, description="Upper ratio of the outperformer spread")
    n_monitoring: Optional[int] = Field(
        None, ge=1, description="Monthly monitoring dates (CallSharpe), equal to 12*T"
    )

    @model_validator(mode="after")
    def check_parameters(self):
        single = self.kind in (PayoffKind.CALL, PayoffKind.CALL_SHARPE)
        if single and self.K is None:
            raise ValueError(f"{self.kind.value} requires a strike K")
        if self.kind == PayoffKind.GEO_CALL_SPREAD:
            if self.K1 is None or self.K2 is None:
                raise ValueError("GeoCallSpread requires strikes K1 and K2")
            if not self.K1 < self.K2:
                raise ValueError("GeoCallSpread requires K1 < K2")
        if self.kind == PayoffKind.OUTPERFORMER_SPREAD and not self.lo < self.hi:
            raise ValueError("OutperformerSpread requires lo < hi")
        if self.kind == PayoffKind.CALL_SHARPE and self.n_monitoring is None:
            raise ValueError("CallSharpe requires n_monitoring")
        return self

    @property
    def path_dependent(self) -> bool:
        return self.kind == PayoffKind.CALL_SHARPE

    def check_model(self, model: ModelSpec) -> None:
        """Raise ValueError if the contract cannot be written on this market."""
        name = self.kind.value
        if self.kind in (PayoffKind.CALL, PayoffKind.CALL_SHARPE) and model.d != 1:
            raise ValueError(f"{name} is a single-asset contract, got d={model.d}")
        pair = (PayoffKind.OUTPERFORMER, PayoffKind.OUTPERFORMER_SPREAD)
        if self.kind in pair and model.d != 2:
            raise ValueError(f"{name} needs exactly 2 assets, got d={model.d}")
        if self.kind == PayoffKind.GEO_OUTPERFORMER and model.d < 2:
            raise ValueError("GeoOutperformer needs at least 2 assets")
        if self.kind == PayoffKind.CALL_SHARPE:
            months = MONTHS_PER_YEAR * model.T
            whole = abs(months - round(months)) <= 1e-9
            if not whole or round(months) != self.n_monitoring:
                raise ValueError(
                    "CallSharpe needs n_monitoring = 12*T, "
                    f"got {self.n_monitoring} for T={model.T}"
                )


class SqpConfig(BaseModel):
    """Settings of the per-point worst-case maximizer."""

    model_config = ConfigDict(frozen=True)

    tol_step: float = Field(
        1e-6,
        gt=0,
        description="SLSQP stops once an iterate moves less than this; also the "
        "minimum distance between distinct starts",
    )
    tol_constraint: float = Field(
        1e-10, gt=0, description="Allowed violation of lambda_min >= 0"
    )
    tol_objective: float = Field(
        1e-10, gt=0, description="SLSQP precision goal on the objective"
    )
    max_iters: int = Field(100, ge=1, description="Maximum SQP iterations per start")
    fd_step: float = Field(1e-5, gt=0, description="Relative central-difference step")
    hessian: Literal["damped-BFGS"] = "damped-BFGS"
    restarts: bool = Field(
        True, description="Extra start at (sigma_max, rho) for small problems"
    )
    max_restart_params: int = Field(
        6, ge=0, description="Restart only if d(d+1)/2 <= this"
    )


class AlgoParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int = Field(..., ge=1, description="Number of time steps")
    P: int = Field(..., ge=1, description="Grid points per time step")
    M: Optional[int] = Field(
        None, ge=2, description="Tree branches per point, 2^d when omitted"
    )
    seed: int = Field(2024, description="Master seed for every random stream")
    kernel: Optional[KernelKind] = Field(
        None,
        description="GPR kernel, Matern32 for baskets and Matern32ARD for CallSharpe",
    )
    workers: int = Field(1, ge=1, description="Ray workers for per-point solves")
    sqp: SqpConfig = Field(default_factory=SqpConfig)

    @field_validator("M")
    @classmethod
    def m_must_be_even(cls, v):
        if v is not None and v % 2:
            raise ValueError("M must be even")
        return v

    def branches_for(self, d: int) -> int:
        return 2**d if self.M is None else self.M


class GprSummary(BaseModel):
    signal_std: float
    length_scales: List[float]
    noise_std: float
    log_marginal_likelihood: float
    jitter: float


class StepDiagnostics(BaseModel):
    n: int = Field(..., description="Time index")
    seconds: float = Field(..., description="Wall-clock seconds for the step")
    points: int = Field(..., description="Grid points solved")
    mean_sqp_iterations: float
    max_sqp_iterations: int
    gpr: Optional[GprSummary] = Field(
        None, description="Fitted hyperparameters of the slice"
    )


class PriceReport(BaseModel):
    value: float = Field(..., description="Worst-case price at t=0 (currency)")
    total_seconds: float
    steps: List[StepDiagnostics] = Field(default_factory=list)
    sigma_star: List[float] = Field(
        default_factory=list, description="Maximizing volatilities at t=0"
    )
    rho_star: List[float] = Field(
        default_factory=list, description="Maximizing correlations at t=0"
    )
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
