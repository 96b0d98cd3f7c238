"""Worst-case pricing of multi-asset and path-dependent options under the
Uncertain Volatility Model, by backward induction over GPR-regressed grids."""

__version__ = "1.0.0"
