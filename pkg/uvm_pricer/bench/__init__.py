"""Independent reference prices for the worst-case engine."""

# Published reference values, consumed as constants only
LITERATURE = {
    "call_sharpe_pde": 58.4,
    "call_sharpe_mc": 55.55,
    "outperformer_spread_variable_rho_mc": 12.67,
    "outperformer_rho_minus_half_mc": 13.77,
    "outperformer_rho_zero_mc": 11.26,
    "outperformer_spread_rho_minus_half_mc": 11.37,
}
