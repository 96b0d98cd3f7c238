import os

from dotenv import load_dotenv

load_dotenv()

PROJECT_NAME = "UVM Worst-Case Pricer"

# Logging
LOG_LEVEL = os.getenv("UVM_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Ray
RAY_ADDRESS = os.getenv("RAY_ADDRESS", "local")
DEFAULT_WORKERS = int(os.getenv("UVM_WORKERS", 1))
# Ray tasks submitted per worker for each time step
CHUNKS_PER_WORKER = 4

# Reproducibility
DEFAULT_SEED = int(os.getenv("UVM_SEED", 2024))

# Reference market and contract defaults
REFERENCE_MARKET = {
    "S0": 100.0,
    "sigma_min": 0.1,
    "sigma_max": 0.2,
    "rho_min": -0.5,
    "rho_max": 0.5,
    "r": 0.0,
    "eta": 0.0,
    "T": 1.0,
    "K1": 90.0,
    "K2": 110.0,
    "K": 100.0,
}

# Numerical tolerances
PSD_TOL = 1e-10
GPR_JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
GPR_RESTARTS = 2
SHARPE_VARIANCE_FLOOR = 1e-12
MONTHS_PER_YEAR = 12

# Benchmark lattice
BENCH_TREE_STEPS = int(os.getenv("UVM_BENCH_STEPS", 2000))
GEO_OUTPERFORMER_BENCH = {"N": 128, "P": 1000}
