import os
from dotenv import load_dotenv
load_dotenv()

SEED = int(os.getenv("GSP_SEED", "2024"))
TRIALS = int(os.getenv("GSP_TRIALS", "1000"))
OUTPUT_DIR = os.getenv("GSP_OUTPUT_DIR", "./results")

# Sup-error certification grids (points per dimension, endpoints included)
SUP_GRID_1D = int(os.getenv("GSP_SUP_GRID_1D", "10001"))
SUP_GRID_2D = int(os.getenv("GSP_SUP_GRID_2D", "401"))
SUP_GRID_ND = int(os.getenv("GSP_SUP_GRID_ND", "41"))

# Gauss-Chebyshev points per dimension for truncated Chebyshev series
SERIES_QUADRATURE = int(os.getenv("GSP_SERIES_QUADRATURE", "64"))

DENSE_EIG_CAP = int(os.getenv("GSP_DENSE_EIG_CAP", "2000"))
COMMUTE_TOL = float(os.getenv("GSP_COMMUTE_TOL", "1e-10"))

# Solvers abort once the residual grows this much above its running minimum
DIVERGENCE_FACTOR = float(os.getenv("GSP_DIVERGENCE_FACTOR", "1e6"))

SNR_FLOOR = float(os.getenv("GSP_SNR_FLOOR", "-5"))
SNR_CAP = float(os.getenv("GSP_SNR_CAP", "300"))

AGENT_DUMP_CAP = int(os.getenv("GSP_AGENT_DUMP_CAP", "1000"))

LOG_LEVEL = os.getenv("GSP_LOG_LEVEL", "INFO")


def default_sup_grid(dims: int) -> int:
    """Default certification grid density for a cube of the given dimension."""
    if dims == 1:
        return SUP_GRID_1D
    if dims == 2:
        return SUP_GRID_2D
    return SUP_GRID_ND
