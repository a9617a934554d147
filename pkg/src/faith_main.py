#!/usr/bin/env python3

"""
faith_main.py - FAITH command-line dispatcher

Maps each subcommand onto one protocol, ledger or benchmark operation:

    setup      ta_setup                   keygen     pre.keygen + key files
    upload     do_upload                  open       do_open
    grant      do_grant                   process    sp_process_grant (one or many, concurrently)
    verify     du_verify                  retrieve   du_retrieve
    audit      ledger block-log audit     bench      bench_suite
    examples   colored usage examples

Exit codes: 0 success, 1 generic failure, 2 verification failed (or a dirty ledger audit),
3 not found, 4 configuration or usage error.

Usage:
    $ python3 faith.py [--json] [--data-dir DIR] <command> [options]
"""

# Standard library imports
import os
import platform
import sys
import time
import traceback

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config

# Custom module imports
import faith_arguments_parser as faith_ap
import faith_bench
import faith_commitment
import faith_help
import faith_ledger
import faith_log_debug
import faith_log_info
import faith_output
import faith_pre
import faith_protocol
import faith_utils
from faith_errors import FaithError, VerificationFailedError

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

version = faith_config.VERSION
MIB = 1024 * 1024

# -------------------------------------------------------------------------
def _open_system(args, behaviour=faith_config.DEFAULT_SP_BEHAVIOUR) -> faith_protocol.FaithSystem:
    processes = getattr(args, "processes", None)
    return faith_protocol.FaithSystem.open(args.data_dir, behaviour, processes, args.params_dir)

# -------------------------------------------------------------------------
def cmd_setup(args) -> int:
    params = faith_protocol.ta_setup(faith_ap.load_setup_config(args), args.params_dir)
    faith_output.emit(args, {
        "params_dir": args.params_dir,
        "params_digest": params.params_digest.hex(),
        "curve": params.ctx.curve_id,
        "chunk_size": params.chunk_size,
        "hash_alg": params.hash_alg,
        "cipher": params.cipher,
        "vrk_files": [f"vrk_{circuit}.json" for circuit in sorted(params.keys)],
    })
    return 0

def cmd_keygen(args) -> int:
    ctx = faith_protocol.load_params(args.params_dir).ctx
    keypair = faith_pre.keygen(ctx)
    faith_pre.save_keypair(args.out, ctx, keypair)
    faith_pre.save_public_key(args.pub, ctx, keypair.pk)
    faith_output.emit(args, {"key": args.out, "public_key": args.pub, "pk_digest": keypair.pk.digest()})
    return 0

def cmd_upload(args) -> int:
    system = _open_system(args)
    owner = faith_pre.load_keypair(args.key, system.params.ctx)
    obj, record = faith_protocol.do_upload(system, owner, args.file, args.file_id, args.verify_sp)
    if args.verbose:
        print(f"Uploaded {args.file} as {obj.file_id} in {record.n} chunks.")
    faith_output.emit(args, {
        "file_id": obj.file_id,
        "owner": record.owner,
        "chunks": record.n,
        "chunk_size": record.chunk_size,
        "root": record.root,
        "height": record.height,
        "sp_verified": bool(args.verify_sp),
    })
    return 0

def cmd_open(args) -> int:
    system = _open_system(args)
    owner = faith_pre.load_keypair(args.key, system.params.ctx)
    faith_protocol.do_open(system, owner, args.file_id, args.out)
    faith_output.emit(args, {"file_id": args.file_id, "out": args.out,
                             "sha256": faith_commitment.flat_hash_baseline(args.out).hex()})
    return 0

def cmd_grant(args) -> int:
    system = _open_system(args)
    ctx = system.params.ctx
    owner = faith_pre.load_keypair(args.key, ctx)
    pk_u = faith_pre.load_public_key(args.to, ctx)
    grant = faith_protocol.do_grant(system, owner, pk_u, args.file_id, args.grant_id)
    faith_output.emit(args, {"grant_id": grant.grant_id, "file_id": grant.file_id, "status": grant.status,
                             "user": pk_u.digest()})
    return 0

def cmd_process(args) -> int:
    system = _open_system(args, args.behaviour)
    grants = system.sp.process_grants(args.grant, args.threads)
    rows = [(grant.grant_id, grant.file_id, grant.status, grant.cause) for grant in grants]
    faith_output.emit(
        args,
        {"behaviour": args.behaviour, "grants": [
            {"grant_id": grant.grant_id, "status": grant.status, "cause": grant.cause} for grant in grants
        ]},
        rows=rows, headers=("grant", "file", "status", "cause"),
    )
    return 0 if all(grant.status != faith_protocol.FAILED for grant in grants) else 1

def cmd_verify(args) -> int:
    system = _open_system(args)
    result, _ = faith_protocol.du_verify(system, args.grant)
    faith_output.emit_verification(args, args.grant, result.ok, result.reason, result.detail)
    return 0 if result.ok else VerificationFailedError.exit_code

def cmd_retrieve(args) -> int:
    system = _open_system(args)
    user = faith_pre.load_keypair(args.key, system.params.ctx)
    faith_protocol.du_retrieve(system, user, args.grant, args.out)
    faith_output.emit(args, {"grant_id": args.grant, "out": args.out,
                             "sha256": faith_commitment.flat_hash_baseline(args.out).hex()})
    return 0

def cmd_audit(args) -> int:
    path = os.path.join(args.data_dir, faith_config.LEDGER_DIRECTORY_NAME, faith_ledger.BLOCK_LOG_NAME)
    report = faith_ledger.audit_block_log(path)
    faith_output.emit(args, {"path": path, **report.to_dict()})
    return 0 if report.clean else VerificationFailedError.exit_code

def cmd_bench(args) -> int:
    summary = faith_bench.bench_suite(
        scenarios=args.scenarios, sizes=[size * MIB for size in args.sizes], reps=args.reps, out_dir=args.out,
        config=faith_ap.load_setup_config(args), threads=args.threads, processes=args.processes,
        pre_iterations=args.pre_iterations, ledger_records=args.ledger_records, seed=args.seed,
        plots=not args.no_plots, verbose=args.verbose,
    )
    faith_output.emit(args, summary)
    return 0

def cmd_examples(_args) -> int:
    faith_help.print_examples()
    return 0

COMMANDS = {
    "setup": cmd_setup,
    "keygen": cmd_keygen,
    "upload": cmd_upload,
    "open": cmd_open,
    "grant": cmd_grant,
    "process": cmd_process,
    "verify": cmd_verify,
    "retrieve": cmd_retrieve,
    "audit": cmd_audit,
    "bench": cmd_bench,
    "examples": cmd_examples,
}

# -------------------------------------------------------------------------
def faith(args) -> int:
    """
    Run one subcommand and turn FAITH errors into structured output and an exit code.
    """
    if args.verbose:
        print(f"Starting FAITH {args.command}.")
    logger_info.info("Starting FAITH %s.", args.command)

    if args.version:
        print(f"FAITH Version: {version}")
        return 0

    try:
        return COMMANDS[args.command](args)
    except FaithError as error:
        logger_debug.debug(traceback.format_exc())
        faith_output.emit_error(args, error)
        return error.exit_code
    except Exception as error:
        logger_info.error("======= Diagnostic Traceback =======")
        logger_info.error(traceback.format_exc())
        logger_info.error("Error: %s", error)
        logger_info.error("====================================")
        raise
    finally:
        if args.verbose:
            print(f"Finished FAITH {args.command}.")
        logger_info.info("Finished FAITH %s.", args.command)

# -------------------------------------------------------------------------
def execute_faith(argv=None) -> int:
    """
    Parse the command line, run it, log timing and platform; returns the exit code.
    """
    args = faith_ap.parse_arguments(argv)

    faith_utils.log_separator_info(logger_info)
    faith_utils.log_separator_debug(logger_debug)
    logger_info.info("Running on: %s", platform.platform())

    start_time = time.time()
    exit_code = faith(args)
    execution_time = time.time() - start_time
    logger_info.info("Operation took %.2f seconds (exit code %d).", execution_time, exit_code)
    if args.verbose:
        print(f"Operation took {execution_time:.2f} seconds.")
    return exit_code

# -------------------------------------------------------------------------
if __name__ == '__main__':
    try:
        sys.exit(execute_faith())
    except (KeyboardInterrupt, EOFError):
        logger_info.error("Process interrupted. Exiting gracefully.")
        sys.exit(1)
