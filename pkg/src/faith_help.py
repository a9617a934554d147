"""
faith_help.py

Usage examples for the FAITH command line, printed by `faith.py examples`.
"""

# Standard library imports
import sys
import os

# pylint: disable=wrong-import-position
# Add config to the sys path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

# Third-party imports
from colorama import Fore, Style

# Local imports
import faith_config
import faith_log_info

# Create an alias for convenience
logger_info = faith_log_info.logger
version = faith_config.VERSION

# -------------------------------------------------------------------------
def examples_text() -> str:
    """
    Return the colored walk-through of a full sharing session.
    """
    logger_info.info("Beginning to construct examples.")
    return f"""
{Fore.YELLOW}FAITH {version}: a full sharing session{Style.RESET_ALL}

{Fore.GREEN}1. Trusted authority: one-time setup{Style.RESET_ALL}
  faith.py setup
  faith.py setup --config faith.yaml --chunk-size 131072 --hash-alg sha256

{Fore.CYAN}Writes params.json and one verifying key per circuit (int, pre, agg) into <data>/params.
Running setup twice with the same configuration gives the same parameters digest.{Style.RESET_ALL}

{Fore.GREEN}2. Keys for the data owner and the data user{Style.RESET_ALL}
  faith.py keygen --out alice.key
  faith.py keygen --out bob.key

{Fore.CYAN}Each key file holds the secret key; the public half is also written to <key>.pub.{Style.RESET_ALL}

{Fore.GREEN}3. Owner uploads a file{Style.RESET_ALL}
  faith.py upload --key alice.key --file report.pdf --file-id report
  faith.py upload --key alice.key --file report.pdf --file-id report --verify-sp

{Fore.CYAN}The file is encrypted and committed in one pass; the commitment root goes on the ledger
and the storage provider builds the per-chunk proofs.{Style.RESET_ALL}

{Fore.GREEN}4. Owner grants access, storage provider processes the grant{Style.RESET_ALL}
  faith.py grant --key alice.key --to bob.key.pub --file-id report --grant-id G1
  faith.py process --grant G1

{Fore.CYAN}'process --behaviour corrupt-reenc' (or corrupt-data, stale-proof, wrong-statement)
simulates a dishonest storage provider.{Style.RESET_ALL}

{Fore.GREEN}5. User verifies and retrieves{Style.RESET_ALL}
  faith.py verify --grant G1
  faith.py retrieve --key bob.key --grant G1 --out report.pdf

{Fore.CYAN}Verification happens before any decryption; 'verify' exits 2 and names the failed check
(integrity, reenc, binding or malformed) when the storage provider misbehaved.{Style.RESET_ALL}

{Fore.GREEN}6. Ledger audit and benchmarks{Style.RESET_ALL}
  faith.py audit
  faith.py bench --sizes 1 16 64 256 --reps 5
  faith.py bench --scenarios pre_ops se_enc se_dec --large

{Fore.CYAN}Add --json to any command for machine-readable output.{Style.RESET_ALL}
"""

# -------------------------------------------------------------------------
def print_examples():
    print(examples_text())
    logger_info.info("Finished printing examples.")
