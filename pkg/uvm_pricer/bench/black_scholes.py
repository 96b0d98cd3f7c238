from typing import Literal

import numpy as np
from scipy.stats import norm


def bs_price(
    S0: float,
    K: float,
    r: float,
    eta: float,
    sigma: float,
    T: float,
    kind: Literal["call", "put"] = "call",
) -> float:
    """Black–Scholes value of a European call or put with dividend yield ``eta``."""
    if min(S0, K, sigma, T) <= 0:
        raise ValueError("S0, K, sigma and T must be positive")
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    vol = sigma * np.sqrt(T)
    d1 = (np.log(S0 / K) + (r - eta + 0.5 * sigma**2) * T) / vol
    d2 = d1 - vol
    forward = S0 * np.exp(-eta * T)
    discounted_strike = K * np.exp(-r * T)
    if kind == "call":
        return float(forward * norm.cdf(d1) - discounted_strike * norm.cdf(d2))
    return float(discounted_strike * norm.cdf(-d2) - forward * norm.cdf(-d1))
