import os
from dotenv import load_dotenv

load_dotenv()

# ============================================================================
# CONFIGURATION
# ============================================================================
# Every value can be overridden through the environment (or a .env file).

# Root seed; all randomness in a run is derived from it
DEFAULT_SEED = int(os.getenv("FAIRPOLICY_SEED", "20240101"))

# Parallel workers for restarts, lambda sweeps and replications (1 = serial)
N_JOBS = int(os.getenv("FAIRPOLICY_N_JOBS", "1"))

LOG_LEVEL = os.getenv("FAIRPOLICY_LOG_LEVEL", "WARNING")
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# Optimizer defaults
CANDIDATE_STARTS = int(os.getenv("FAIRPOLICY_CANDIDATE_STARTS", "50"))
MAX_ITERS = int(os.getenv("FAIRPOLICY_MAX_ITERS", "500"))
FTOL = float(os.getenv("FAIRPOLICY_FTOL", "1e-8"))

# Uniform lambda grid {0, 1/m, ..., 1}
GRID_M = int(os.getenv("FAIRPOLICY_GRID_M", "49"))

# Majority share of the toy population
TOY_P = float(os.getenv("FAIRPOLICY_TOY_P", "0.75"))

# Numerical tolerances
MASS_TOL = 1e-9      # mass sums accepted on input, renormalized afterwards
SIMPLEX_TOL = 1e-9   # rule rows
