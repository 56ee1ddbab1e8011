"""spotex configuration — all constants, defaults, and thresholds."""

import os

# ─── Paths ────────────────────────────────────────────────────────────────────

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))

# Bundled scenarios and rule files live inside the package (spotex/data/)
DATA_DIR = os.path.join(PACKAGE_DIR, "data")
SCENARIOS_DIR = os.path.join(DATA_DIR, "scenarios")
RULES_DIR = os.path.join(DATA_DIR, "rules")

RULES_SUFFIX = ".spotex"

# ─── Radio model ──────────────────────────────────────────────────────────────

RSSI_MIN = -100
RSSI_MAX = 0

# Scan timestamps are ms since the epoch; the upper bound keeps every
# timestamp convertible to a local datetime (9999-12-31T00:00Z).
MAX_TIMESTAMP_MS = 253_402_214_400_000

# Entries for access points one side never heard are set to this value
# before any distance is computed.
MISSING_RSSI_FILL = -100.0

# ─── Group detection (convoys) ────────────────────────────────────────────────

DEFAULT_DELTA_MS = int(os.environ.get("SPOTEX_DELTA_MS", 5000))     # Δ, time threshold
DEFAULT_OMEGA_DB = float(os.environ.get("SPOTEX_OMEGA_DB", 6.0))    # Ω, RSSI threshold
DEFAULT_TMAX_S = 60                                                 # lookback for `spotex groups`

# ─── Check-ins ────────────────────────────────────────────────────────────────

CHECKIN_TTL_MS = int(os.environ.get("SPOTEX_CHECKIN_TTL_MS", 15 * 60 * 1000))

# ─── Simulator ────────────────────────────────────────────────────────────────
# None of these come from measurements; they are pinned by the scenario file.

PATH_LOSS_EXPONENT = 3.0
DEFAULT_TX_REF_DBM = -40.0
DEFAULT_VISIBILITY_FLOOR_DBM = -95.0
DEFAULT_NOISE_SIGMA_DB = 2.0
DEFAULT_SCAN_PERIOD_MS = 2000
MIN_SEPARATION_M = 0.1

SCENARIO_SCHEMA_VERSION = 1

# Noise is drawn from numpy's PCG64 bit generator seeded with the scenario seed.
SEED = 42
SEED_ENV_VAR = "SPOTEX_SEED"

# ─── Rules DSL ────────────────────────────────────────────────────────────────

KEYWORDS = ("IF", "THEN", "AND", "OR", "NOT")
MAX_NESTING_DEPTH = 100

# ─── CLI ──────────────────────────────────────────────────────────────────────

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_MISMATCH = 3
