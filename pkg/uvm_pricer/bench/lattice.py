"""Worst-case prices of one-dimensional problems on a recombining log-space lattice.

Nodes sit at y0·exp(j·dx) with dx = √1.5·σ_max·√Δt. From each node the lattice
moves up, stays or moves down with probabilities that reproduce the risk-neutral
mean exactly and the log-variance σ̂²Δt. The value at a node is the largest
discounted expectation over σ̂ ∈ [vol_min, vol_max].
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

logger = logging.getLogger(__name__)

SPACING_FACTOR = np.sqrt(1.5)
GOLDEN_SECTION_ITERS = 48
_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DividendRule:
    """η̂(σ̂) = base + variance_coef·σ̂², constant when ``variance_coef`` is 0."""

    base: float = 0.0
    variance_coef: float = 0.0

    @property
    def constant(self) -> bool:
        return self.variance_coef == 0.0

    def __call__(self, sigma):
        return self.base + self.variance_coef * np.asarray(sigma) ** 2


@dataclass(frozen=True)
class Vertical1D:
    """scale·[(y − lower)+ − (y − upper)+]; ``upper=inf`` gives a plain call."""

    lower: float
    upper: float = np.inf
    scale: float = 1.0

    def __call__(self, y: np.ndarray) -> np.ndarray:
        long = np.maximum(y - self.lower, 0.0)
        short = np.maximum(y - self.upper, 0.0) if np.isfinite(self.upper) else 0.0
        return self.scale * (long - short)


@dataclass(frozen=True)
class Reduced1D:
    y0: float
    vol_min: float
    vol_max: float
    div: DividendRule
    payoff1d: Callable[[np.ndarray], np.ndarray]
    r: float = 0.0
    T: float = 1.0
    description: str = field(default="", compare=False)

    def __post_init__(self):
        if self.y0 <= 0:
            raise ValueError(f"y0 must be positive, got {self.y0}")
        if not 0 < self.vol_min <= self.vol_max:
            raise ValueError(
                "reduced volatility bounds must satisfy 0 < vol_min <= vol_max"
            )
        if self.T <= 0:
            raise ValueError("T must be positive")


def _probabilities(
    sigma, dt: float, dx: float, r: float, div: DividendRule
) -> Tuple[np.ndarray, ...]:
    q = np.asarray(sigma) ** 2 * dt / dx**2
    growth = np.exp((r - div(sigma)) * dt)
    up = (growth - 1.0 + q * (1.0 - np.exp(-dx))) / (np.exp(dx) - np.exp(-dx))
    return up, 1.0 - q, q - up


def _expectation(sigma, above, middle, below, dt, dx, r, div):
    up, mid, down = _probabilities(sigma, dt, dx, r, div)
    return up * above + mid * middle + down * below


def _golden_section(f, lo: float, hi: float, size: int) -> np.ndarray:
    """Per-node maximiser of ``f`` over [lo, hi], f vectorised over nodes."""
    a = np.full(size, lo)
    b = np.full(size, hi)
    c = b - _INV_PHI * (b - a)
    e = a + _INV_PHI * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(GOLDEN_SECTION_ITERS):
        left = fc >= fe
        b = np.where(left, e, b)
        a = np.where(left, a, c)
        c = b - _INV_PHI * (b - a)
        e = a + _INV_PHI * (b - a)
        fc, fe = f(c), f(e)
    return f(0.5 * (a + b))


def uvm_tree_1d(reduced: Reduced1D, steps: int) -> float:
    """Worst-case value at y0 after ``steps`` lattice steps to maturity.

    The lattice is trinomial (up, middle, down at spacing √1.5·σ_max·√Δt),
    not the two-branch increment the pricing engine uses; every volatility in the
    box is matched on the same nodes.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    dt = reduced.T / steps
    dx = SPACING_FACTOR * reduced.vol_max * np.sqrt(dt)
    discount = np.exp(-reduced.r * dt)
    lo, hi = reduced.vol_min, reduced.vol_max

    values = reduced.payoff1d(reduced.y0 * np.exp(dx * np.arange(-steps, steps + 1)))
    for n in range(steps - 1, -1, -1):
        below, middle, above = values[:-2], values[1:-1], values[2:]

        def node_value(sigma, above=above, middle=middle, below=below):
            return _expectation(
                sigma, above, middle, below, dt, dx, reduced.r, reduced.div
            )

        best = np.maximum(node_value(lo), node_value(hi))
        if not reduced.div.constant and hi > lo:
            best = np.maximum(best, _golden_section(node_value, lo, hi, middle.size))
        values = discount * best

    logger.debug("Lattice price", extra={"steps": steps, "value": float(values[0])})
    return float(values[0])
