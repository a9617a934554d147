#!/usr/bin/env python3

"""
faith.py - Entry point for the FAITH command line.

Checks that the third-party packages FAITH needs are importable before handing over to
`faith_main.execute_faith`.  A missing package is reported with its pip name instead of an
ImportError deep inside a subcommand.

Usage:
    $ python3 faith.py setup
    $ python3 faith.py --json verify --grant G1
    $ python3 faith.py examples
"""

import importlib.util
import sys

import faith_log_debug
import faith_log_info

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

# import name -> pip package
REQUIRED_MODULES = {
    "py_ecc": "py_ecc",
    "cryptography": "cryptography",
    "yaml": "PyYAML",
    "tabulate": "tabulate",
    "colorama": "colorama",
    "psutil": "psutil",
    "numpy": "numpy",
    "pandas": "pandas",
    "matplotlib": "matplotlib",
}

# -------------------------------------------------------------------------
def missing_modules():
    """
    Returns:
        list: pip names of required packages that cannot be imported.
    """
    missing = [pip_name for module, pip_name in REQUIRED_MODULES.items() if importlib.util.find_spec(module) is None]
    logger_debug.debug("Missing modules: %s", missing)
    return missing

# -------------------------------------------------------------------------
def main():
    missing = missing_modules()
    if missing:
        logger_info.error("Missing required packages: %s", ", ".join(missing))
        print("Some required dependencies are missing: " + ", ".join(missing))
        print("Please run 'pip install -r requirements.txt' to install the required packages.")
        return 1

    # pylint: disable=import-outside-toplevel
    from faith_main import execute_faith
    return execute_faith()

# -------------------------------------------------------------------------
if __name__ == '__main__':
    try:
        sys.exit(main())
    except (KeyboardInterrupt, EOFError):
        logger_info.error("Process interrupted. Exiting gracefully.")
        sys.exit(1)
