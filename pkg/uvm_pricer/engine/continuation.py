"""Value functions at t_{n+1} and the per-point objectives built on them.

Everything here is a plain picklable object so a step can be shipped to Ray
workers.
"""

from dataclasses import dataclass

import numpy as np

from uvm_pricer.engine.grid import is_monitoring
from uvm_pricer.engine.payoffs import payoff_values
from uvm_pricer.models import ModelSpec, PayoffSpec
from uvm_pricer.numerics.gpr import GprModel, predict_mean_batch
from uvm_pricer.numerics.sqp import UvmPoint
from uvm_pricer.numerics.treestep import (
    BranchMode,
    BranchSet,
    Continuation,
    branch_spots,
    step_expectation,
)

SHARPE_BRANCHES = BranchSet(d=1, mode=BranchMode.FULL, signs=np.array([[-1.0], [1.0]]))


@dataclass(frozen=True)
class PayoffContinuation:
    """Exact terminal value Ψ."""

    payoff: PayoffSpec
    T: float

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return payoff_values(self.payoff, states, self.T)


@dataclass(frozen=True)
class GprContinuation:
    """Regressed value of the next slice, floored at zero."""

    model: GprModel

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return np.maximum(predict_mean_batch(self.model, states), 0.0)


@dataclass(frozen=True)
class BasketObjective:
    """c ↦ one-step tree expectation from spot vector ``x`` with frozen branches."""

    x: np.ndarray
    dt: float
    model: ModelSpec
    branches: BranchSet
    continuation: Continuation

    def __call__(self, c: UvmPoint) -> float:
        return step_expectation(
            self.x, c, self.dt, self.model, self.branches, self.continuation
        )


@dataclass(frozen=True)
class SharpeObjective:
    """c ↦ two-branch expectation for the path state (S, A1) or (S, A1, A2) at t_n.

    A1 gains the squared return since the last fixing only when t_{n+1} is itself
    a monitoring date. Otherwise the fixing A2 is carried forward.
    """

    x: np.ndarray
    n: int
    N: int
    n_monitoring: int
    dt: float
    model: ModelSpec
    continuation: Continuation

    def next_states(self, c: UvmPoint) -> np.ndarray:
        spot, a1 = self.x[0], self.x[1]
        fixing = self.x[2] if self.x.size == 3 else spot
        spots = branch_spots(self.x[:1], c, self.dt, self.model, SHARPE_BRANCHES)
        branches = spots[:, 0]
        if is_monitoring(self.n + 1, self.N, self.n_monitoring):
            return np.column_stack([branches, a1 + np.log(branches / fixing) ** 2])
        return np.column_stack([branches, np.full(2, a1), np.full(2, fixing)])

    def __call__(self, c: UvmPoint) -> float:
        values = self.continuation(self.next_states(c))
        return float(np.exp(-self.model.r * self.dt) * np.mean(values))
