# faith_config.py
# This file contains variables for use in all scripts.

import os

# Set the version
VERSION = "v1.0.0"

# Directory holding SP storage, the ledger block log and published parameters.
# The FAITH_DATA_DIR environment variable overrides it.
DEFAULT_DATA_DIRECTORY = os.environ.get(
    "FAITH_DATA_DIR",
    os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data"),
)

# Sub-directories of the data directory
PARAMS_DIRECTORY_NAME = "params"
SP_DIRECTORY_NAME = "sp"
LEDGER_DIRECTORY_NAME = "ledger"

# Pairing-friendly curve: bn254 (native, needs charm-crypto), bls12-381 (pure Python) or toy-<prime> for tests
DEFAULT_CURVE = "bn254"

# Envelope chunk size in bytes.  Must be a power of two between the bounds below.
DEFAULT_CHUNK_SIZE = 64 * 1024
MIN_CHUNK_SIZE = 4 * 1024
MAX_CHUNK_SIZE = 4 * 1024 * 1024

# Symmetric cipher for the envelope: aes-256-gcm or chacha20-poly1305
DEFAULT_CIPHER = "aes-256-gcm"

# Chunk hash for the commitment and integrity proofs: poseidon2, sha256 or sha3-256
DEFAULT_HASH_ALG = "poseidon2"

# Number of trace transitions opened by each leaf integrity proof
INT_LEAF_SPOT_CHECKS = 8

# Number of leaves opened by a root integrity proof (smaller files cycle through all their leaves)
INT_ROOT_OPENINGS = 8

# Opening paths are padded to this many levels, so files of up to 2^32 chunks share one proof size
INT_MAX_TREE_DEPTH = 32

# Ledger operation latencies kept for inspection; older entries only feed the per-operation totals
LEDGER_METRICS_WINDOW = 10000

# Worker processes for leaf proving (0 = one per CPU, 1 = prove in-process)
PROVER_PROCESSES = 0

# Worker threads for envelope encryption and decryption (1 = sequential)
ENCRYPT_THREADS = 1

# Storage provider behaviour: honest, corrupt-data, stale-proof, corrupt-reenc, wrong-statement
DEFAULT_SP_BEHAVIOUR = "honest"

# Allow caller-forced randomness (enc with a fixed r, sigma proofs with a fixed s).
# Only the test suite switches this on.
ENABLE_TEST_HOOKS = False

# Verify the SP's integrity proof at upload time (DO side)
DEFAULT_DO_VERIFY_UPLOAD = False

# Benchmark defaults
BENCH_DEFAULT_SIZES_MIB = [1, 16, 64, 256]
BENCH_LARGE_SIZES_MIB = [1024, 2048, 3072, 4096, 5120]
BENCH_REPETITIONS = 5
BENCH_PRE_ITERATIONS = 1000
BENCH_LEDGER_RECORDS = 200
BENCH_THREADS = 1
BENCH_OUTPUT_DIRECTORY_NAME = "bench"
BENCH_CSV_SCHEMA = "faith-bench-v1"

# Number of characters to print for log separator
LOG_SEPARATOR_LENGTH = 55

# Default log file size
MAX_LOG_SIZE = 1 * 1024 * 1024  # 1 MB

# Default numer of logs to keep
LOG_RETENTION_COUNT = 5  # Keep the latest 5 log files.

# Preferred Time Format
LOG_TIME_FORMAT = "%Y-%m-%d %H:%M:%S"

# Specify the default directory to save log files to
DEFAULT_LOG_DIRECTORY = os.environ.get(
    "FAITH_LOG_DIR",
    os.path.join(os.path.dirname(os.path.abspath(__file__)), "logs"),
)

# Console logging level (INFO OR ERROR, ERROR is the default)
CONSOLE_LOGGING_LEVEL = "ERROR"

# Colors ANSI escape code can be found here:
# https://en.wikipedia.org/wiki/ANSI_escape_code

# Verification result colors
VERIFY_OK_COLOR = "\033[1;32m"  # bold green
VERIFY_FAIL_COLOR = "\033[1;31m"  # bold red

# Restet the color of the terminal back to its defaults
TERMINAL_COLOR_RESET = "\033[m"
