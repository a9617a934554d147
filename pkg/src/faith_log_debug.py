"""
faith_log_debug.py

This module sets up the debug logger for FAITH. It receives the detailed trail of every operation:
digests, sizes, per-chunk progress, ledger metric samples and diagnostic tracebacks.

Attributes:
    logger (logging.Logger): Logger instance used for debug logging across the FAITH modules.
    log_file (str): Full path to the debug log file.

Example:
    from faith_log_debug import logger
    logger.debug("leaf %d digest %s", index, digest.hex())

Note:
    The log directory comes from `faith_config.DEFAULT_LOG_DIRECTORY` and is created when missing.
    The logger does not propagate messages to avoid duplicate entries.
"""

import logging
from logging.handlers import RotatingFileHandler
import os
import sys

# Add config to the sys path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

# Custom Modules imports
# pylint: disable=wrong-import-position
import faith_config

# Create an alias for convenience
max_log_size = faith_config.MAX_LOG_SIZE
log_retention_count = faith_config.LOG_RETENTION_COUNT
log_time_format = faith_config.LOG_TIME_FORMAT

# Create logger with a custom name
logger = logging.getLogger("faith_logger_debug")
logger.setLevel(logging.DEBUG)

# Resolve the absolute path and make sure it exists
log_directory = os.path.abspath(faith_config.DEFAULT_LOG_DIRECTORY)
os.makedirs(log_directory, exist_ok=True)

log_file = os.path.join(log_directory, "faith_log_debug.log")

# Create rotating file handler
file_handler = RotatingFileHandler(log_file, maxBytes=max_log_size, backupCount=log_retention_count)
file_handler.setLevel(logging.DEBUG)

# Stop the logger from propagating messages up to the root logger
logger.propagate = False

formatter = logging.Formatter('%(asctime)s - %(levelname)s - [%(filename)s:%(funcName)s] - %(message)s', datefmt=log_time_format)
file_handler.setFormatter(formatter)

# Clear any existing handlers to avoid duplicate logging
logger.handlers.clear()
logger.addHandler(file_handler)
