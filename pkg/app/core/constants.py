"""
Configuration constants for the trace limit verifier.
Contains numeric defaults, report formats, and environment-specific settings.
"""

# Report Configuration
REPORT_SCHEMA_VERSION = 1
REPORT_LEDGER_FILE = "ledger.json"
REPORT_CONSTANTS_FILE = "constants.json"
REPORT_RESIDUALS_FILE = "residuals.csv"
REPORT_HYPERBOLIC_FILE = "hyperbolic.csv"
RESIDUAL_COLUMNS = [
    "X",
    "family",
    "partial_sum",
    "main_term",
    "residual",
    "alpha",
    "residual_scaled",
]
HYPERBOLIC_COLUMNS = ["n", "i_hyp_deg1", "j_hyp_hat_S", "j_tilde_hyp_S"]

# Precision Configuration
DEFAULT_PRECISION = 30  # decimal digits
GUARD_DIGITS = 10
QUADRATURE_TOLERANCE = 1e-10
QUADRATURE_LIMIT = 200

# Reference values used as oracles in self-checks
ARCH_COMPLETED_CONSTANT = -1.953808582  # gamma - 2 log 2 - log pi

# Sweep Configuration
DEFAULT_X_GRID = [1_000, 10_000, 100_000, 1_000_000]
SLOPE_X_GRID = [1_000 * 2**k for k in range(8)]
SWEEP_CHUNK_SIZE = 16_384
SWEEP_WORKERS = 4

# HTTP Limits
MAX_PRIME = 251  # shell regions grow linearly in p
VERIFY_TIMEOUT = 30.0  # seconds

# Residual exponents alpha in |residual| / X^alpha per family
RESIDUAL_ALPHA = {
    "harmonic": -1.0,
    "divisor": 0.5,
    "residual": 0.5,
    "convolution": 0.75,
    "hyp_deg1": 2.0 / 3.0,
    "jhat": 2.0 / 3.0,
    "jtilde": 2.0 / 3.0,
}

# Sieve Configuration
SIEVE_BYTES_PER_ENTRY = 48  # d, phi, mu, lpf, lambda prime/exponent as int64
SIEVE_MEMORY_FRACTION = 0.5
SIEVE_HARD_LIMIT = 50_000_000

# Archimedean Profile Configuration
DEFAULT_PROFILE = "default"
DEFAULT_PROFILE_RADIUS = 4.0
NARROW_PROFILE_RADIUS = 1.5
PROFILE_TRANSITION_WIDTH = 1.0

# Series resolution
SERIES_MAX_TERMS = 400

# Environment Detection
ENV_DEBUG = "debug"
ENV_DEV = "dev"
ENV_TEST = "test"
ENV_PROD = "prod"

# Logging Configuration
LOG_LEVEL_DEBUG = "DEBUG"
LOG_LEVEL_INFO = "INFO"

# Exit codes of the command-line front end
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
