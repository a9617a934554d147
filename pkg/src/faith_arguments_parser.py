"""
faith_arguments_parser.py

Command-line parsing for FAITH.  One subcommand per protocol, ledger or benchmark operation,
plus global flags (--data-dir, --params-dir, --json, -v/--verbose, -V/--version).

Argument errors are logged and exit through argparse with the usage status 4; configuration files
given with --config are YAML mappings using the ta_setup keys.
"""

# Importing standard libraries
import argparse
import os
import sys
import traceback

# Third-party imports
import yaml

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config
import faith_log_debug
import faith_log_info
import faith_utils
from faith_errors import ConfigError
from faith_protocol import SP_BEHAVIOURS

# Create an alias for convenience
logger_debug = faith_log_debug.logger
logger_info = faith_log_info.logger

SUBCOMMANDS = ("setup", "keygen", "upload", "open", "grant", "process", "retrieve", "verify", "audit", "bench",
               "examples")
USAGE_EXIT_CODE = ConfigError.exit_code

# -------------------------------------------------------------------------
class FaithArgumentParser(argparse.ArgumentParser):
    """
    argparse with usage errors logged and mapped to the configuration/usage exit code.
    """

    def error(self, message):
        logger_info.error("Usage error: %s", message)
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT_CODE, f"{self.prog}: error: {message}\n")

# -------------------------------------------------------------------------
def _add_config_flags(parser):
    """
    Flags overriding ta_setup configuration keys (after any --config file).
    """
    parser.add_argument("--config", help="YAML file with setup keys (chunk_size, hash_alg, cipher, curve, ...).")
    parser.add_argument("--chunk-size", type=int, help=f"Chunk size in bytes (default {faith_config.DEFAULT_CHUNK_SIZE}).")
    parser.add_argument("--hash-alg", choices=("poseidon2", "sha256", "sha3-256"), help="Chunk hash for the commitment.")
    parser.add_argument("--cipher", choices=("aes-256-gcm", "chacha20-poly1305"), help="Envelope AEAD.")
    parser.add_argument("--curve", help="Pairing group (bn254, bls12-381, or toy-<prime> for testing).")
    parser.add_argument("--leaf-checks", type=int, help="Sampled transitions per leaf proof.")
    parser.add_argument("--root-openings", type=int, help="Sampled leaf openings per root proof.")

# -------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = FaithArgumentParser(
        prog="faith.py",
        description="Verifiable private file sharing: proxy re-encryption, integrity proofs and a mock ledger.",
    )
    parser.add_argument("-V", "--version", action="store_true", help="Show version information and exit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose mode.")
    parser.add_argument("--json", action="store_true", help="Machine-readable JSON output on stdout.")
    parser.add_argument("--data-dir", default=faith_config.DEFAULT_DATA_DIRECTORY,
                        help="Data directory holding params/, sp/ and ledger/ (env FAITH_DATA_DIR).")
    parser.add_argument("--params-dir", help="Published parameters directory (default <data-dir>/params).")

    commands = parser.add_subparsers(dest="command", metavar="command")

    setup = commands.add_parser("setup", help="Trusted-authority setup: write system parameters and verifying keys.")
    setup.add_argument("--out", help="Directory for params.json and vrk files (default <data-dir>/params).")
    _add_config_flags(setup)

    keygen = commands.add_parser("keygen", help="Generate a key pair.")
    keygen.add_argument("--out", required=True, help="Key file to write; the public key goes to <out>.pub.")
    keygen.add_argument("--pub", help="Public key file (default <out>.pub).")

    upload = commands.add_parser("upload", help="Owner: encrypt, commit and store a file.")
    upload.add_argument("--key", required=True, help="Owner key file.")
    upload.add_argument("--file", required=True, help="Plaintext file.")
    upload.add_argument("--file-id", help="File id (default: the file name).")
    upload.add_argument("--verify-sp", action="store_true", default=faith_config.DEFAULT_DO_VERIFY_UPLOAD,
                        help="Check the storage provider's integrity proof against the local commitment.")
    upload.add_argument("--processes", type=int, default=faith_config.PROVER_PROCESSES,
                        help="Prover worker processes (0 = one per CPU).")

    open_parser = commands.add_parser("open", help="Owner: decrypt one of your own uploads.")
    open_parser.add_argument("--key", required=True, help="Owner key file.")
    open_parser.add_argument("--file-id", required=True, help="File id.")
    open_parser.add_argument("--out", required=True, help="Plaintext output file.")

    grant = commands.add_parser("grant", help="Owner: grant a user access to a file.")
    grant.add_argument("--key", required=True, help="Owner key file.")
    grant.add_argument("--to", required=True, help="User public key file.")
    grant.add_argument("--file-id", required=True, help="File id.")
    grant.add_argument("--grant-id", help="Grant id (default: random).")

    process = commands.add_parser("process", help="Storage provider: re-encrypt, prove and publish grants.")
    process.add_argument("--grant", nargs="+", required=True, help="Grant id(s).")
    process.add_argument("--behaviour", choices=SP_BEHAVIOURS, default=faith_config.DEFAULT_SP_BEHAVIOUR,
                         help="Storage provider behaviour; anything but honest injects a fault.")
    process.add_argument("--threads", type=int, default=1, help="Grants processed concurrently.")
    process.add_argument("--processes", type=int, default=faith_config.PROVER_PROCESSES,
                         help="Prover worker processes (0 = one per CPU).")

    retrieve = commands.add_parser("retrieve", help="User: verify a grant, then decrypt the file.")
    retrieve.add_argument("--key", required=True, help="User key file.")
    retrieve.add_argument("--grant", required=True, help="Grant id.")
    retrieve.add_argument("--out", required=True, help="Plaintext output file.")

    verify = commands.add_parser("verify", help="User: verify a grant without decrypting.")
    verify.add_argument("--grant", required=True, help="Grant id.")

    commands.add_parser("audit", help="Re-check the ledger's block log.")

    bench = commands.add_parser("bench", help="Run the benchmark suite (CSV, summary and SVG plots).")
    bench.add_argument("--scenarios", nargs="+", help="Scenarios to run (default: all).")
    bench.add_argument("--sizes", nargs="+", type=int, help="File sizes in MiB.")
    bench.add_argument("--large", action="store_true", help="Use the large size range (up to 5 GiB).")
    bench.add_argument("--reps", type=int, default=faith_config.BENCH_REPETITIONS, help="Repetitions per size.")
    bench.add_argument("--pre-iterations", type=int, default=faith_config.BENCH_PRE_ITERATIONS,
                       help="Calls per PRE algorithm.")
    bench.add_argument("--ledger-records", type=int, default=faith_config.BENCH_LEDGER_RECORDS,
                       help="Records for the ledger scenarios.")
    bench.add_argument("--threads", type=int, default=faith_config.BENCH_THREADS, help="Envelope worker threads.")
    bench.add_argument("--processes", type=int, default=1, help="Prover worker processes (0 = one per CPU).")
    bench.add_argument("--out", help="Output directory (default <data-dir>/bench).")
    bench.add_argument("--no-plots", action="store_true", help="Skip plot rendering.")
    bench.add_argument("--seed", type=int, default=0, help="Seed for fixtures and keys.")
    _add_config_flags(bench)

    commands.add_parser("examples", help="Show usage examples.")
    return parser

# -------------------------------------------------------------------------
def load_setup_config(args) -> dict:
    """
    Setup keys from --config (YAML) overlaid by the command-line flags.

    Raises:
        ConfigError: unreadable file or not a mapping.
    """
    config = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as stream:
                loaded = yaml.safe_load(stream) or {}
        except (OSError, yaml.YAMLError) as error:
            raise ConfigError(f"cannot read configuration {args.config}: {error}") from error
        if not isinstance(loaded, dict):
            raise ConfigError(f"configuration {args.config} must be a mapping")
        config.update(loaded)
    for key in ("chunk_size", "hash_alg", "cipher", "curve", "leaf_checks", "root_openings"):
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    logger_debug.debug("Setup configuration: %s", config)
    return config

# -------------------------------------------------------------------------
def validate_and_set_defaults(args, parser):
    """
    Resolve directories and defaults that depend on other arguments.
    """
    if args.version:
        return
    if not args.command:
        parser.error("a command is required (try 'faith.py examples')")

    args.data_dir = os.path.abspath(args.data_dir)
    args.params_dir = os.path.abspath(
        args.params_dir or os.path.join(args.data_dir, faith_config.PARAMS_DIRECTORY_NAME)
    )
    if args.command == "setup" and args.out:
        args.params_dir = os.path.abspath(args.out)
    if args.command == "keygen" and not args.pub:
        args.pub = args.out + ".pub"
    if args.command == "bench":
        if args.sizes and args.large:
            parser.error("--sizes and --large are mutually exclusive")
        sizes = args.sizes or (faith_config.BENCH_LARGE_SIZES_MIB if args.large else faith_config.BENCH_DEFAULT_SIZES_MIB)
        if any(size <= 0 for size in sizes):
            parser.error("--sizes must be positive")
        args.sizes = sizes
        args.out = os.path.abspath(
            args.out or os.path.join(args.data_dir, faith_config.BENCH_OUTPUT_DIRECTORY_NAME)
        )
    for name in ("threads", "processes"):
        if getattr(args, name, 0) is not None and getattr(args, name, 0) < 0:
            parser.error(f"--{name} must not be negative")

# -------------------------------------------------------------------------
def parse_arguments(argv=None):
    """
    Parse and validate command-line arguments; returns the namespace.
    """
    logger_info.info("Beginning parsing the arguments.")
    parser = build_parser()

    try:
        args = parser.parse_args(argv)
        validate_and_set_defaults(args, parser)
    except SystemExit:
        raise
    except Exception as error:
        logger_info.error("Error while parsing arguments: %s", error)
        logger_info.error(traceback.format_exc())
        raise

    logger_info.info("Arguments have been parsed.")
    faith_utils.log_separator_data(logger_debug)
    logger_debug.debug("Raw arguments: %s", args)
    faith_utils.log_separator_data(logger_debug)
    return args
