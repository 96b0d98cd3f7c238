"""Exact Gaussian Process Regression with Matérn 3/2 kernels.

Hyperparameters (σ_f, length scales, σ_n) are found by maximising the log marginal
likelihood with scikit-learn's optimizer; the posterior itself is kept as an explicit
Cholesky factor so predictions are cheap and deterministic.

Targets are standardised (zero prior mean on the normalised scale) and each input
dimension is standardised before fitting. ``KernelSpec`` values refer to that
normalised space.
"""

import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.spatial.distance import pdist
from sklearn.exceptions import ConvergenceWarning
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, Kernel, Matern, WhiteKernel

from uvm_pricer.config import GPR_JITTER_LADDER, GPR_RESTARTS
from uvm_pricer.errors import GprFitError

logger = logging.getLogger(__name__)

SIGNAL_VARIANCE_BOUNDS = (1e-4, 1e4)
LENGTH_SCALE_BOUNDS = (1e-3, 1e3)
# σ_n between 1e-6 and 0.1 target standard deviations
NOISE_VARIANCE_BOUNDS = (1e-12, 1e-2)


class KernelKind(str, Enum):
    MATERN32 = "Matern32"
    MATERN32_ARD = "Matern32ARD"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    signal_std: float
    length_scales: Tuple[float, ...]

    def __post_init__(self):
        if self.signal_std <= 0 or any(ls <= 0 for ls in self.length_scales):
            raise ValueError("kernel scale parameters must be strictly positive")
        if self.kind == KernelKind.MATERN32 and len(self.length_scales) != 1:
            raise ValueError("isotropic Matern32 takes a single length scale")

    @cached_property
    def sklearn_kernel(self) -> Kernel:
        if self.kind == KernelKind.MATERN32:
            length = self.length_scales[0]
        else:
            length = np.asarray(self.length_scales)
        return ConstantKernel(self.signal_std**2, "fixed") * Matern(
            length_scale=length, length_scale_bounds="fixed", nu=1.5
        )


def kernel_eval(spec: KernelSpec, x: np.ndarray, x_prime: np.ndarray) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if spec.kind == KernelKind.MATERN32_ARD and x.size != len(spec.length_scales):
        raise ValueError("input dimension does not match the ARD length scales")
    return float(spec.sklearn_kernel(x[None, :], x_prime[None, :])[0, 0])


@dataclass(frozen=True)
class Normalization:
    x_shift: np.ndarray
    x_scale: np.ndarray
    y_shift: float
    y_scale: float

    @classmethod
    def from_data(cls, X: np.ndarray, Y: np.ndarray) -> "Normalization":
        x_scale = X.std(axis=0)
        x_scale[x_scale <= 0] = 1.0
        y_scale = float(Y.std())
        return cls(
            x_shift=X.mean(axis=0),
            x_scale=x_scale,
            y_shift=float(Y.mean()),
            y_scale=y_scale if y_scale > 0 else 1.0,
        )

    @classmethod
    def identity(cls, dim: int) -> "Normalization":
        return cls(np.zeros(dim), np.ones(dim), 0.0, 1.0)

    def inputs(self, X: np.ndarray) -> np.ndarray:
        return (X - self.x_shift) / self.x_scale

    def targets(self, Y: np.ndarray) -> np.ndarray:
        return (Y - self.y_shift) / self.y_scale


@dataclass(frozen=True)
class GprModel:
    X: np.ndarray
    Y: np.ndarray
    kernel: KernelSpec
    noise_std: float
    chol_factor: np.ndarray
    alpha: np.ndarray
    normalization: Normalization
    jitter: float
    log_marginal_likelihood: float
    initial_log_marginal_likelihood: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def collapse_duplicates(X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Merge identical input rows, averaging their targets."""
    unique, inverse = np.unique(X, axis=0, return_inverse=True)
    if unique.shape[0] == X.shape[0]:
        return X, Y
    inverse = inverse.reshape(-1)
    sums = np.bincount(inverse, weights=Y, minlength=unique.shape[0])
    counts = np.bincount(inverse, minlength=unique.shape[0])
    logger.debug(f"Collapsed {X.shape[0] - unique.shape[0]} duplicate GPR inputs")
    return unique, sums / counts


def _as_training_data(X, Y) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if X.shape[0] != Y.shape[0] or X.shape[0] < 1:
        raise GprFitError(
            "bad_training_set", f"got {X.shape[0]} inputs and {Y.shape[0]} targets"
        )
    if not np.all(np.isfinite(Y)):
        raise GprFitError("non_finite_targets", "GPR targets must be finite")
    return collapse_duplicates(X, Y)


def _normalization(X: np.ndarray, Y: np.ndarray, normalize: bool) -> Normalization:
    if normalize:
        return Normalization.from_data(X, Y)
    return Normalization.identity(X.shape[1])


def condition(
    X,
    Y,
    kernel: KernelSpec,
    noise_std: float,
    *,
    normalize: bool = True,
    log_marginal_likelihood: float = float("nan"),
    initial_log_marginal_likelihood: Optional[float] = None,
) -> GprModel:
    """Posterior for fixed hyperparameters.

    Diagonal jitter is added along the ladder until K̃ factorises.
    """
    X, Y = _as_training_data(X, Y)
    normalization = _normalization(X, Y, normalize)
    Z = normalization.inputs(X)
    t = normalization.targets(Y)
    gram = kernel.sklearn_kernel(Z)
    gram[np.diag_indices_from(gram)] += noise_std**2

    for jitter in GPR_JITTER_LADDER:
        try:
            factor, _ = cho_factor(
                gram + jitter * np.eye(len(t)), lower=True, check_finite=False
            )
        except np.linalg.LinAlgError:
            logger.debug(f"Gram factorisation failed with jitter {jitter:.0e}")
            continue
        chol = np.tril(factor)
        alpha = cho_solve((chol, True), t, check_finite=False)
        return GprModel(
            X=Z,
            Y=t,
            kernel=kernel,
            noise_std=float(noise_std),
            chol_factor=chol,
            alpha=alpha,
            normalization=normalization,
            jitter=jitter,
            log_marginal_likelihood=log_marginal_likelihood,
            initial_log_marginal_likelihood=initial_log_marginal_likelihood,
        )
    raise GprFitError(
        "factorisation_failed",
        "K + noise is not positive definite even with jitter "
        f"{GPR_JITTER_LADDER[-1]:.0e}",
    )


def fit(
    X,
    Y,
    kind: KernelKind = KernelKind.MATERN32,
    *,
    normalize: bool = True,
    random_state: int = 0,
) -> GprModel:
    """Maximise the log marginal likelihood over (σ_f, σ_l, σ_n), then condition."""
    X, Y = _as_training_data(X, Y)
    normalization = _normalization(X, Y, normalize)
    Z = normalization.inputs(X)
    t = normalization.targets(Y)

    target_std = float(t.std()) if t.size > 1 and t.std() > 0 else 1.0
    distances = pdist(Z) if Z.shape[0] > 1 else np.empty(0)
    distances = distances[distances > 0]
    length0 = float(np.median(distances)) if distances.size else 1.0
    length0 = float(np.clip(length0, *LENGTH_SCALE_BOUNDS))
    ard = kind == KernelKind.MATERN32_ARD
    noise_bounds = tuple(bound * target_std**2 for bound in NOISE_VARIANCE_BOUNDS)

    prior = ConstantKernel(
        np.clip(target_std**2, *SIGNAL_VARIANCE_BOUNDS), SIGNAL_VARIANCE_BOUNDS
    ) * Matern(
        length_scale=np.full(Z.shape[1], length0) if ard else length0,
        length_scale_bounds=LENGTH_SCALE_BOUNDS,
        nu=1.5,
    ) + WhiteKernel((1e-3 * target_std) ** 2, noise_bounds)

    last_error: Optional[Exception] = None
    for jitter in GPR_JITTER_LADDER:
        regressor = GaussianProcessRegressor(
            kernel=prior,
            alpha=jitter,
            n_restarts_optimizer=GPR_RESTARTS,
            normalize_y=False,
            random_state=random_state,
        )
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                regressor.fit(Z, t)
        except (np.linalg.LinAlgError, ValueError) as e:
            last_error = e
            continue
        break
    else:
        raise GprFitError(
            "factorisation_failed", f"hyperparameter search failed: {last_error}"
        )

    fitted = regressor.kernel_
    signal_std = float(np.sqrt(fitted.k1.k1.constant_value))
    lengths = np.atleast_1d(fitted.k1.k2.length_scale).astype(float)
    noise_std = float(np.sqrt(fitted.k2.noise_level))
    spec = KernelSpec(kind=kind, signal_std=signal_std, length_scales=tuple(lengths))
    initial_lml = float(regressor.log_marginal_likelihood(prior.theta))

    model = condition(
        X,
        Y,
        spec,
        noise_std,
        normalize=normalize,
        log_marginal_likelihood=float(regressor.log_marginal_likelihood_value_),
        initial_log_marginal_likelihood=initial_lml,
    )
    logger.debug(
        "Fitted GPR",
        extra={
            "points": X.shape[0],
            "signal_std": signal_std,
            "length_scales": lengths.tolist(),
            "noise_std": noise_std,
        },
    )
    return model


def _cross_kernel(model: GprModel, Xs: np.ndarray) -> np.ndarray:
    Zs = model.normalization.inputs(np.atleast_2d(np.asarray(Xs, dtype=float)))
    return model.kernel.sklearn_kernel(Zs, model.X)


def predict_mean_batch(model: GprModel, Xs: np.ndarray) -> np.ndarray:
    """μ* at each row of ``Xs``, in the original target units."""
    mean = _cross_kernel(model, Xs) @ model.alpha
    return model.normalization.y_shift + model.normalization.y_scale * mean


def predict_var_batch(model: GprModel, Xs: np.ndarray) -> np.ndarray:
    """σ*² at each row of ``Xs`` (original units, noise-free latent variance)."""
    cross = _cross_kernel(model, Xs)
    v = solve_triangular(model.chol_factor, cross.T, lower=True, check_finite=False)
    var = model.kernel.signal_std**2 - np.sum(v * v, axis=0)
    return np.clip(var, 0.0, None) * model.normalization.y_scale**2


def predict_mean(model: GprModel, x: np.ndarray) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != model.dim:
        raise ValueError(f"expected a {model.dim}-dimensional input, got {x.size}")
    return float(predict_mean_batch(model, x[None, :])[0])


def predict_var(model: GprModel, x: np.ndarray) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != model.dim:
        raise ValueError(f"expected a {model.dim}-dimensional input, got {x.size}")
    return float(predict_var_batch(model, x[None, :])[0])
