"""Worst-case parameter search at a single market state.

Maximises a deterministic objective over
c = (σ̂₁..σ̂_d, ρ̂₁₂..ρ̂_{d−1,d}) subject to the box bounds and
Γ(ρ̂) ⪰ 0, written as the smooth constraint λ_min(Γ(ρ̂)) ≥ 0.
Uses SciPy's SLSQP (BFGS Hessian, ℓ1-merit line search) with central
finite-difference gradients.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize

from uvm_pricer.errors import SqpError
from uvm_pricer.models import ModelSpec, SqpConfig
from uvm_pricer.numerics.correlation import (
    gamma_from_rho,
    min_eigenpair,
    n_pairs,
    nearest_psd,
    pair_indices,
)

logger = logging.getLogger(__name__)

BOX_TOL = 1e-12


@dataclass(frozen=True)
class UvmPoint:
    """Constant parameters (σ̂, ρ̂) applied over one time step."""

    sigma: np.ndarray
    rho: np.ndarray

    @property
    def d(self) -> int:
        return len(self.sigma)

    def as_vector(self) -> np.ndarray:
        sigma = np.asarray(self.sigma, dtype=float)
        return np.concatenate([sigma, np.asarray(self.rho, dtype=float)])

    @classmethod
    def from_vector(cls, v: np.ndarray, d: int) -> "UvmPoint":
        v = np.asarray(v, dtype=float)
        return cls(sigma=v[:d].copy(), rho=v[d:].copy())


@dataclass(frozen=True)
class ParameterBox:
    d: int
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_model(cls, model: ModelSpec) -> "ParameterBox":
        return cls(
            d=model.d,
            lower=np.concatenate([model.sigma_min, model.rho_min]).astype(float),
            upper=np.concatenate([model.sigma_max, model.rho_max]).astype(float),
        )

    @property
    def size(self) -> int:
        return self.d + n_pairs(self.d)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, v: np.ndarray, tol: float = BOX_TOL) -> bool:
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))


class SqpResult(NamedTuple):
    point: UvmPoint
    value: float
    iterations: int
    evaluations: int


def psd_margin(v: np.ndarray, d: int) -> float:
    """λ_min(Γ(ρ̂)); +inf when there is no correlation to constrain."""
    if d < 3:
        return np.inf
    return min_eigenpair(gamma_from_rho(v[d:], d))[0]


def project_correlations(v: np.ndarray, box: ParameterBox) -> np.ndarray:
    """Clip to the box and replace an indefinite Γ(ρ̂) by its nearest PSD repair."""
    d = box.d
    out = np.clip(v, box.lower, box.upper)
    if d >= 3 and psd_margin(out, d) < 0:
        iu, ju = pair_indices(d)
        out[d:] = nearest_psd(gamma_from_rho(out[d:], d))[iu, ju]
        out = np.clip(out, box.lower, box.upper)
    return out


class _Problem:
    """Objective wrapper: counts evaluations and extends the objective continuously
    to indefinite Γ (the optimizer may probe infeasible points between iterates)."""

    def __init__(
        self,
        objective: Callable[[UvmPoint], float],
        box: ParameterBox,
        cfg: SqpConfig,
    ):
        self.objective = objective
        self.box = box
        self.cfg = cfg
        self.evaluations = 0

    def value(self, x: np.ndarray) -> float:
        d = self.box.d
        if psd_margin(x, d) < -self.cfg.tol_constraint:
            x = project_correlations(x, self.box)
        self.evaluations += 1
        return float(self.objective(UvmPoint.from_vector(x, d)))

    def gradient(self, x: np.ndarray, free: np.ndarray) -> np.ndarray:
        grad = np.zeros(int(free.sum()))
        for k, i in enumerate(np.flatnonzero(free)):
            h = self.cfg.fd_step * max(1.0, abs(x[i]))
            up = min(x[i] + h, self.box.upper[i])
            down = max(x[i] - h, self.box.lower[i])
            x_up, x_down = x.copy(), x.copy()
            x_up[i], x_down[i] = up, down
            grad[k] = (self.value(x_up) - self.value(x_down)) / (up - down)
        return grad

    def feasible(self, x: np.ndarray) -> bool:
        if not self.box.contains(x):
            return False
        return psd_margin(x, self.box.d) >= -self.cfg.tol_constraint


def _constraint_jacobian(x: np.ndarray, d: int, free: np.ndarray) -> np.ndarray:
    _, vec = min_eigenpair(gamma_from_rho(x[d:], d))
    iu, ju = pair_indices(d)
    jac = np.zeros_like(x)
    jac[d:] = 2.0 * vec[iu] * vec[ju]
    return jac[free]


class _SmallStep(Exception):
    def __init__(self, y: np.ndarray, nit: int):
        super().__init__(nit)
        self.y = y
        self.nit = nit


class _StepMonitor:
    """SLSQP callback that stops once an iterate moves less than ``tol_step``."""

    def __init__(self, y0: np.ndarray, tol_step: float):
        self.previous = np.array(y0, dtype=float)
        self.tol_step = tol_step
        self.nit = 0

    def __call__(self, y: np.ndarray) -> None:
        self.nit += 1
        if np.linalg.norm(y - self.previous) < self.tol_step:
            raise _SmallStep(np.array(y, dtype=float), self.nit)
        self.previous = np.array(y, dtype=float)


def _solve_from(problem: _Problem, x0: np.ndarray, free: np.ndarray) -> tuple:
    box, cfg = problem.box, problem.cfg
    d = box.d

    def full(y: np.ndarray) -> np.ndarray:
        x = x0.copy()
        x[free] = y
        return np.clip(x, box.lower, box.upper)

    constraints: List[dict] = []
    if d >= 3 and free[d:].any():
        constraints.append(
            {
                "type": "ineq",
                "fun": lambda y: psd_margin(full(y), d) + cfg.tol_constraint,
                "jac": lambda y: _constraint_jacobian(full(y), d, free)[None, :],
            }
        )

    monitor = _StepMonitor(x0[free], cfg.tol_step)
    try:
        result = minimize(
            lambda y: -problem.value(full(y)),
            x0[free],
            jac=lambda y: -problem.gradient(full(y), free),
            method="SLSQP",
            bounds=list(zip(box.lower[free], box.upper[free])),
            constraints=constraints,
            options={"maxiter": cfg.max_iters, "ftol": cfg.tol_objective},
            callback=monitor,
        )
        y, nit, message = result.x, int(result.nit), result.message
    except _SmallStep as stop:
        y, nit, message = stop.y, stop.nit, f"step norm below {cfg.tol_step:g}"
    candidate = full(y)
    if not problem.feasible(candidate):
        candidate = project_correlations(candidate, box)
    logger.debug(f"SLSQP finished: {message}", extra={"nit": nit})
    return candidate, nit


def maximize(
    objective: Callable[[UvmPoint], float],
    box: ParameterBox,
    start: UvmPoint,
    cfg: Optional[SqpConfig] = None,
) -> SqpResult:
    """Feasible maximiser of ``objective``; never worse than ``start``."""
    cfg = cfg or SqpConfig()
    d = box.d
    x0 = start.as_vector()
    if x0.size != box.size:
        raise SqpError(
            "bad_start", f"start has {x0.size} parameters, box has {box.size}"
        )
    problem = _Problem(objective, box, cfg)
    if not problem.feasible(x0):
        raise SqpError(
            "infeasible_start", "start point violates the box or the PSD constraint"
        )

    best_x, best_value = x0, problem.value(x0)
    free = box.upper > box.lower
    if not free.any():
        return SqpResult(start, best_value, 0, problem.evaluations)

    starts = [x0]
    if cfg.restarts and box.size <= cfg.max_restart_params:
        alternative = x0.copy()
        alternative[:d] = box.upper[:d]
        if np.linalg.norm(alternative - x0) > cfg.tol_step:
            starts.append(alternative)

    iterations = 0
    for x_start in starts:
        candidate, nit = _solve_from(problem, x_start, free)
        iterations += nit
        if not problem.feasible(candidate):
            continue
        value = problem.value(candidate)
        if value > best_value:
            best_x, best_value = candidate, value

    best = UvmPoint.from_vector(best_x, d)
    return SqpResult(best, best_value, iterations, problem.evaluations)
