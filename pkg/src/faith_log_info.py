"""
faith_log_info.py

This module sets up the information-level logger for FAITH.

Attributes:
    console_logging_level (str): The logging level for console output.
    logger (logging.Logger): Logger instance for information-level logging.
    log_file (str): Full path to the info log file.
    file_handler (RotatingFileHandler): Rotating file handler set for log rotation based on file size.
    console_handler (logging.StreamHandler): Console handler to output log messages to the terminal.

Example:
    from faith_log_info import logger
    logger.info("Upload of %s finished.", file_id)

Note:
    Only messages at or above `CONSOLE_LOGGING_LEVEL` reach the terminal; everything at INFO goes to the file.
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
console_logging_level = faith_config.CONSOLE_LOGGING_LEVEL

# Create logger with a custom name
logger = logging.getLogger("faith_logger_info")
logger.setLevel(logging.INFO)

# Resolve the absolute path and make sure it exists
log_directory = os.path.abspath(faith_config.DEFAULT_LOG_DIRECTORY)
os.makedirs(log_directory, exist_ok=True)

log_file = os.path.join(log_directory, "faith_log_info.log")

# Create rotating file handler
file_handler = RotatingFileHandler(log_file, maxBytes=max_log_size, backupCount=log_retention_count)
file_handler.setLevel(logging.INFO)

# Console handler, ERROR by default so the CLI output stays machine-readable
console_handler = logging.StreamHandler()
console_handler.setLevel(getattr(logging, console_logging_level))

# Stop the logger from propagating messages up to the root logger
logger.propagate = False

# https://docs.python.org/3/library/datetime.html#strftime-and-strptime-format-codes
formatter = logging.Formatter('%(asctime)s - %(levelname)s - [%(filename)s:%(funcName)s] - %(message)s', datefmt=log_time_format)

file_handler.setFormatter(formatter)
console_handler.setFormatter(formatter)

# Clear any existing handlers to avoid duplicate logging
logger.handlers.clear()
logger.addHandler(file_handler)
logger.addHandler(console_handler)
