"""
Configuration and constants for the non-Gaussianity certification toolkit.
"""
import os

# Application Settings
APP_NAME = 'NonGaussCert'
APP_VERSION = "1.0.0"

# Store the run ledger in the user's data directory (override with NGC_DATA_DIR)
DATABASE_NAME = 'runs.db'
data_dir = os.environ.get(
    'NGC_DATA_DIR',
    os.path.join(os.environ.get('LOCALAPPDATA', os.path.expanduser('~')), APP_NAME),
)
os.makedirs(data_dir, exist_ok=True)
DATABASE_PATH = os.path.join(data_dir, DATABASE_NAME)

# Numerical Tolerances
ABS_TOL = 1e-12
REL_TOL = 1e-9
TAIL_TOL = 1e-12  # truncated Fock-space probability budget
QUARTIC_RESIDUAL_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12
MAX_FOCK_DIM = 4096

# Certification Thresholds
CRITERION_THRESHOLD = 2.0
CERTIFIED_G2_LIMIT = 4.0 / 9.0

# Time-tag Analysis Defaults
PERIOD_PS = 12150
WINDOW_PS = 3200
NORM_DELAY_PULSES = 500
MAX_PULSE_LAG = 10
REORDER_TOL_PS = 2 ** 20
N_CHANNELS = 3
GQTT_MAGIC = b"GQTT01"
CHUNK_RECORDS = 1 << 20
JACOBI_BIN_NS = 0.1
JACOBI_EXTENT_NS = 3.2

# Source Simulation Defaults
LIFETIME_PS = 250.0
LEAK_WIDTH_PS = 20.0
JITTER_PS = 30.0
CASCADE_SPLIT = (0.5, 0.25, 0.25)
SIM_BLOCK_PULSES = 1 << 20

# Statistics Configuration
UPPER_LIMIT_CL = 0.6827
P_TRUNCATION_DECADES = 60
BOUNDARY_GRID_POINTS = 200
BOUNDARY_REFINE_TOL = 1e-6

# Scan Grids (n_alpha, n_r, n_theta) and parameter ranges
SCAN_PRESETS = {
    "pure": {"alpha_max": 1.0, "r_max": 1.0, "theta_max": 3.141592653589793, "shape": (1000, 501, 21)},
    "coarse": {"alpha_max": 1.0, "r_max": 1.0, "theta_max": 3.141592653589793, "shape": (200, 101, 5)},
    "wide": {"alpha_max": 2.0, "r_max": 2.0, "theta_max": 3.141592653589793, "shape": (1000, 501, 21)},
    "tiny": {"alpha_max": 1.0, "r_max": 1.0, "theta_max": 0.0, "shape": (1, 1, 1)},
}
SCAN_CHUNK_ALPHA = 50

# Exit Codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2

# Performance Settings
BATCH_SIZE = 50  # runs listed at once by the history command
DEFAULT_JOBS = 1
