"""Application constants and default values."""

from enum import IntEnum


class ExitCode(IntEnum):
    """CLI exit status per error family."""

    OK = 0
    FAILURE = 1
    CONFIG = 2
    CONTROLLER = 3
    NUMERICAL = 4


MATERIAL_PARAMETERS = ("rho", "mu", "alpha1", "beta", "gamma", "kappa", "l1", "l2")

# Grid
MIN_INTERIOR_NODES = 2
DEFAULT_INTERIOR_NODES = 40

# Lyapunov multiplier weight (sigma_max does not depend on it)
DEFAULT_B1 = 1.0
# Fraction of delta_max used when delta* = 1/(2M) is not admissible
DELTA_SAFETY_FACTOR = 0.99

# Positive-real frequency sweep
FREQ_SWEEP_MIN = 1e-4
FREQ_SWEEP_MAX = 1e4
FREQ_SWEEP_POINTS = 400

# Certificate tolerances
MKY_REL_TOL = 1e-8
MKY_ABS_TOL = 1e-12
# Delta ladder for the n >= 2 Riccati solve
MKY_DELTA_LADDER = (1e2, 1e-8, 21)

# Energy balance and envelope checks
BALANCE_REL_TOL = 1e-10
ENVELOPE_SLACK = 1e-8
CONSTRAINT_TOL = 1e-12

# Decay-rate fit
MIN_FIT_SAMPLES = 10
DEFAULT_FIT_WINDOW = (0.2, 1.0)

# Gain tuning
DEFAULT_TUNE_POINTS = 25
# Tuned rates below this fraction of the certified ceiling are flagged
NEGLIGIBLE_RATE_FRACTION = 1e-4

# Output
FLOAT_DIGITS = 17
CSV_COLUMNS = (
    "t",
    "E_h",
    "E_hybrid",
    "L_h",
    "w1_end",
    "w2_end",
    "q_norm",
    "dissipation_residual",
)
TRAJECTORY_FILE = "trajectory.csv"
REPORT_FILE = "report.yaml"
CERTIFICATE_FILE = "certificate.txt"
CONSTANTS_FILE = "constants.yaml"
TUNE_FILE = "tune.csv"
SNAPSHOT_FILE = "snapshots.yaml"
VERIFY_FILE = "verify.yaml"

# Random states drawn by the verify subcommand, per delta fraction
VERIFY_SANDWICH_STATES = 200
VERIFY_DELTA_FRACTIONS = (0.1, 0.5, 0.9)

# Logging format
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
