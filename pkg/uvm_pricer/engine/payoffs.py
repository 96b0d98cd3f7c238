"""Terminal payoffs Ψ of the contracts in scope."""

import numpy as np

from uvm_pricer.config import SHARPE_VARIANCE_FLOOR
from uvm_pricer.errors import PayoffError
from uvm_pricer.models import PayoffKind, PayoffSpec

# Terminal state width per contract; None means any width ≥ the minimum
_STATE_WIDTH = {
    PayoffKind.CALL: (1, 1),
    PayoffKind.OUTPERFORMER: (2, 2),
    PayoffKind.OUTPERFORMER_SPREAD: (2, 2),
    PayoffKind.GEO_CALL_SPREAD: (1, None),
    PayoffKind.GEO_OUTPERFORMER: (2, None),
    PayoffKind.CALL_SHARPE: (2, 2),
}


def _geometric_mean(spots: np.ndarray) -> np.ndarray:
    return np.exp(np.mean(np.log(spots), axis=1))


def payoff_values(spec: PayoffSpec, states: np.ndarray, T: float = 1.0) -> np.ndarray:
    """Ψ for each row of ``states`` (shape (M, k)).

    For CallSharpe a row is (S_T, A1_T) and ``T`` is the maturity used to annualise
    the realised variance.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    low, high = _STATE_WIDTH[spec.kind]
    width = states.shape[1]
    if width < low or (high is not None and width > high):
        raise PayoffError(
            "dimension_mismatch",
            f"{spec.kind.value} cannot be evaluated on {width}-dimensional states",
        )

    if spec.kind == PayoffKind.CALL:
        return np.maximum(states[:, 0] - spec.K, 0.0)
    if spec.kind == PayoffKind.OUTPERFORMER:
        return np.maximum(states[:, 1] - states[:, 0], 0.0)
    if spec.kind == PayoffKind.OUTPERFORMER_SPREAD:
        s1, s2 = states[:, 0], states[:, 1]
        return np.maximum(s2 - spec.lo * s1, 0.0) - np.maximum(s2 - spec.hi * s1, 0.0)
    if spec.kind == PayoffKind.GEO_CALL_SPREAD:
        g = _geometric_mean(states)
        return np.maximum(g - spec.K1, 0.0) - np.maximum(g - spec.K2, 0.0)
    if spec.kind == PayoffKind.GEO_OUTPERFORMER:
        return np.maximum(_geometric_mean(states[:, 1:]) - states[:, 0], 0.0)

    # CallSharpe
    realised = np.maximum(states[:, 1] / T, SHARPE_VARIANCE_FLOOR)
    return np.maximum(states[:, 0] - spec.K, 0.0) / np.sqrt(realised)


def payoff_eval(spec: PayoffSpec, terminal_state, T: float = 1.0) -> float:
    state = np.atleast_1d(np.asarray(terminal_state, dtype=float))
    if state.ndim != 1:
        raise PayoffError(
            "dimension_mismatch", "payoff_eval takes a single terminal state"
        )
    return float(payoff_values(spec, state[None, :], T)[0])
