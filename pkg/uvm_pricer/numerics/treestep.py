"""One-step binomial tree: 2^d equally likely branch points from sign vectors."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from uvm_pricer.errors import BranchError
from uvm_pricer.models import ModelSpec
from uvm_pricer.numerics.correlation import gamma_from_rho, sqrt_gamma
from uvm_pricer.numerics.sqp import UvmPoint

logger = logging.getLogger(__name__)

# Maps an (M, k) array of branch states to M values
Continuation = Callable[[np.ndarray], np.ndarray]

MAX_DIMENSION = 62


class BranchMode(str, Enum):
    FULL = "Full"
    SUBSAMPLED = "Subsampled"


@dataclass(frozen=True)
class BranchSet:
    d: int
    mode: BranchMode
    signs: np.ndarray

    @property
    def M(self) -> int:
        return self.signs.shape[0]


def _signs_from_codes(codes: np.ndarray, d: int) -> np.ndarray:
    # bit i of the code is asset i: set -> +1, clear -> -1
    bits = (codes[:, None] >> np.arange(d, dtype=np.int64)[None, :]) & 1
    return (2 * bits - 1).astype(float)


def make_branches(d: int, M: int, rng_seed: int) -> BranchSet:
    """Full enumeration when M = 2^d, otherwise M/2 antithetic pairs drawn without
    replacement. The draw depends only on ``rng_seed``."""
    if not 1 <= d <= MAX_DIMENSION:
        raise BranchError(
            "bad_dimension", f"d must lie in [1, {MAX_DIMENSION}], got {d}"
        )
    if M % 2:
        raise BranchError("odd_branch_count", f"M must be even, got {M}")
    total = 2**d
    if not 2 <= M <= total:
        raise BranchError(
            "branch_count_out_of_range",
            f"M must lie in [2, {total}] for d={d}, got {M}",
        )

    if M == total:
        codes = np.arange(total, dtype=np.int64)
        return BranchSet(d=d, mode=BranchMode.FULL, signs=_signs_from_codes(codes, d))

    # One representative per pair {G, -G}: the code with the top bit clear
    rng = np.random.default_rng(rng_seed)
    representatives = rng.choice(total // 2, size=M // 2, replace=False)
    representatives = representatives.astype(np.int64)
    codes = np.empty(M, dtype=np.int64)
    codes[0::2] = representatives
    codes[1::2] = (total - 1) ^ representatives
    return BranchSet(d=d, mode=BranchMode.SUBSAMPLED, signs=_signs_from_codes(codes, d))


def branch_spots(
    x: np.ndarray, c: UvmPoint, dt: float, model: ModelSpec, branches: BranchSet
) -> np.ndarray:
    """Spot vectors reached by each branch, shape (M, d)."""
    sigma = np.asarray(c.sigma, dtype=float)
    root = sqrt_gamma(gamma_from_rho(np.asarray(c.rho, dtype=float), model.d))
    shocks = branches.signs @ root.T
    drift = (model.r - np.asarray(model.eta) - 0.5 * sigma**2) * dt
    spots = np.asarray(x, dtype=float)[None, :]
    return spots * np.exp(drift + sigma * shocks * np.sqrt(dt))


def step_expectation(
    x: np.ndarray,
    c: UvmPoint,
    dt: float,
    model: ModelSpec,
    branches: BranchSet,
    continuation: Continuation,
) -> float:
    """Discounted equal-weight average of ``continuation`` over the branch points."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    values = continuation(branch_spots(x, c, dt, model, branches))
    return float(np.exp(-model.r * dt) * np.mean(values))
