"""Halton points and the standard-normal quantile used to map them to Gaussians."""

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from uvm_pricer.errors import DomainError


def first_primes(count: int) -> Tuple[int, ...]:
    primes = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return tuple(primes)


@dataclass
class HaltonState:
    """Plain (unscrambled) Halton iterator starting at index 1.

    Index 0 maps to the origin, which has no Gaussian quantile, so it is skipped.
    """

    dimension: int
    next_index: int = 1
    bases: Tuple[int, ...] = field(init=False)
    _engine: qmc.Halton = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError(
                "bad_dimension", f"dimension must be >= 1, got {self.dimension}"
            )
        if self.next_index < 1:
            raise DomainError(
                "bad_index", f"next_index must be >= 1, got {self.next_index}"
            )
        self.bases = first_primes(self.dimension)
        self._engine = qmc.Halton(d=self.dimension, scramble=False)
        self._engine.fast_forward(self.next_index)

    def take(self, count: int) -> np.ndarray:
        """Next ``count`` consecutive points as a (count, d) array."""
        points = self._engine.random(count)
        self.next_index += count
        return points


def halton_next(state: HaltonState) -> np.ndarray:
    return state.take(1)[0]


def inv_norm_cdf(u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Standard-normal quantile Φ⁻¹(u) for u in (0, 1)."""
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError("outside_unit_interval", "inv_norm_cdf needs 0 < u < 1")
    z = ndtri(arr)
    return float(z) if np.ndim(u) == 0 else z
