import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

APP_VERSION = os.getenv("APP_VERSION", "1.0.0")

# Output locations
RESULTS_DIR = Path(os.getenv("RESULTS_DIR", "results"))
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Quadrature and root finding
QUAD_TOL = float(os.getenv("QUAD_TOL", "1e-9"))
MH_TOL = float(os.getenv("MH_TOL", "1e-12"))
MH_BRACKET_BITS = int(os.getenv("MH_BRACKET_BITS", "80"))
GAUGE_GRID_PER_DECADE = int(os.getenv("GAUGE_GRID_PER_DECADE", "512"))
GAUGE_TOL = float(os.getenv("GAUGE_TOL", "1e-12"))
FINITENESS_DECADES = int(os.getenv("FINITENESS_DECADES", "40"))

# Measures
ATOM_MERGE_TOL = float(os.getenv("ATOM_MERGE_TOL", "1e-12"))
CUBE_GAUSS_ORDER = int(os.getenv("CUBE_GAUSS_ORDER", "4"))
BALL_SUBDIVISION_DEPTH = int(os.getenv("BALL_SUBDIVISION_DEPTH", "4"))

# Operators
DENSE_SVD_MAX_N = int(os.getenv("DENSE_SVD_MAX_N", "64"))
POWER_ITER_FACTOR = int(os.getenv("POWER_ITER_FACTOR", "10"))
POWER_ITER_MIN = int(os.getenv("POWER_ITER_MIN", "200"))
# 0 evaluates every eps breakpoint; a positive cap subsamples and is flagged
MAX_EPS_BREAKPOINTS = int(os.getenv("MAX_EPS_BREAKPOINTS", "0"))
WOLFF_GAUSS_ORDER = int(os.getenv("WOLFF_GAUSS_ORDER", "8"))
WOLFF_MAX_PIECES = int(os.getenv("WOLFF_MAX_PIECES", "64"))
SUPPORT_SAMPLE_MAX = int(os.getenv("SUPPORT_SAMPLE_MAX", "256"))

# Evaluation and trials
EVAL_CHUNK = int(os.getenv("EVAL_CHUNK", "4096"))
TRIAL_WORKERS = int(os.getenv("TRIAL_WORKERS", "1"))
DEFAULT_TRIALS = int(os.getenv("DEFAULT_TRIALS", "4096"))
DELTA_GRID = int(os.getenv("DELTA_GRID", "256"))
BOOTSTRAP_SAMPLES = int(os.getenv("BOOTSTRAP_SAMPLES", "200"))

# Every CSV float is written with this many significant digits
FLOAT_DIGITS = 17
