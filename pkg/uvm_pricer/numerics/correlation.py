"""Correlation matrices Γ(ρ₁₂, …, ρ_{d−1,d}).

Construction, PSD checks, square roots and repair.

Pairs (i, j), i < j, are flattened in lexicographic order
(1,2), (1,3), …, (1,d), (2,3), …; the same order is used by the optimizer and the
engine.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from uvm_pricer.config import PSD_TOL
from uvm_pricer.errors import CorrelationError

logger = logging.getLogger(__name__)


def n_pairs(d: int) -> int:
    return d * (d - 1) // 2


def pair_indices(d: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(d, k=1)


@dataclass(frozen=True)
class CorrParams:
    d: int
    rho: Tuple[float, ...]

    def __post_init__(self):
        if self.d < 1:
            raise CorrelationError("bad_dimension", f"d must be >= 1, got {self.d}")
        if len(self.rho) != n_pairs(self.d):
            raise CorrelationError(
                "bad_length",
                f"expected {n_pairs(self.d)} correlations for d={self.d}, "
                f"got {len(self.rho)}",
            )
        if any(not -1.0 <= r <= 1.0 for r in self.rho):
            raise CorrelationError("out_of_range", "correlations must lie in [-1, 1]")


def gamma_from_rho(rho: np.ndarray, d: int) -> np.ndarray:
    """Unchecked Γ construction for hot loops."""
    gamma = np.eye(d)
    if d > 1:
        iu, ju = pair_indices(d)
        gamma[iu, ju] = rho
        gamma[ju, iu] = rho
    return gamma


def build_gamma(params: CorrParams) -> np.ndarray:
    return gamma_from_rho(np.asarray(params.rho, dtype=float), params.d)


def min_eigenpair(gamma: np.ndarray) -> Tuple[float, np.ndarray]:
    """Smallest eigenvalue and the first eigenvector returned for it."""
    eigvals, eigvecs = np.linalg.eigh(gamma)
    return float(eigvals[0]), eigvecs[:, 0]


def is_psd(gamma: np.ndarray, tol: float = PSD_TOL) -> bool:
    """Cholesky test on Γ + tol·I."""
    try:
        np.linalg.cholesky(gamma + tol * np.eye(gamma.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


def sqrt_gamma(gamma: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Σ with Σ Σᵀ = Γ.

    Cholesky when Γ is definite, the spectral root on the PSD boundary.
    """
    try:
        return np.linalg.cholesky(gamma)
    except np.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(gamma)
    if eigvals[0] < -tol:
        raise CorrelationError(
            "indefinite",
            f"correlation matrix is indefinite (min eigenvalue {eigvals[0]:.3e})",
            min_eigenvalue=float(eigvals[0]),
        )
    root = np.sqrt(np.clip(eigvals, 0.0, None))
    return (eigvecs * root) @ eigvecs.T


def nearest_psd(gamma: np.ndarray) -> np.ndarray:
    """Spectral projection onto the PSD cone, then rescaled back to unit diagonal."""
    sym = 0.5 * (gamma + gamma.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals[0] >= 0.0:
        return sym.copy()
    projected = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    scale = 1.0 / np.sqrt(np.diag(projected))
    repaired = projected * np.outer(scale, scale)
    repaired = 0.5 * (repaired + repaired.T)
    np.fill_diagonal(repaired, 1.0)
    logger.debug(
        "Projected correlation matrix onto the PSD cone",
        extra={"min_eigenvalue": float(eigvals[0]), "d": gamma.shape[0]},
    )
    return repaired
