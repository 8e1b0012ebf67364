"""Runtime settings read from the environment, plus decoder defaults."""

import os

_seed = os.environ.get("QSYND_SEED")
SEED_OVERRIDE: int | None = int(_seed) if _seed not in (None, "") else None

STORAGE_DIR = os.environ.get("QSYND_STORAGE_DIR", "/tmp/qsynd_results")
RESULT_EXPIRY_HOURS = int(os.environ.get("QSYND_RESULT_EXPIRY_HOURS", "48"))
DEFAULT_WORKERS = int(os.environ.get("QSYND_WORKERS", "1"))
LOG_LEVEL = os.environ.get("QSYND_LOG_LEVEL", "INFO").upper()

# HTTP resource bounds
MAX_WORKERS = max(DEFAULT_WORKERS, os.cpu_count() or 1)
MAX_UPLOAD_BYTES = int(os.environ.get("QSYND_MAX_UPLOAD_BYTES", str(1024 * 1024)))
MAX_UPLOAD_QUBITS = int(os.environ.get("QSYND_MAX_UPLOAD_QUBITS", "8192"))

# Simulation setup used for the LP Tanner experiments
DEFAULT_BETA = 0.75
DEFAULT_L_MAX = 100
DEFAULT_GAMMA_CUTOFF = 5.0
DEFAULT_LLR_SAT = 30.0
DEFAULT_BATCH_SIZE = 64

CSV_SCHEMA = "# qsynd-sweep v1"


def resolve_seed(seed: int) -> int:
    """QSYND_SEED wins over any seed given in a config file or flag."""
    return SEED_OVERRIDE if SEED_OVERRIDE is not None else seed
