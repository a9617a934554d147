"""
faith_utils.py

Helpers shared by the FAITH modules: log separators, canonical JSON, the tagged binary layout
used for keys, ciphertexts, proofs and protocol messages, and small numeric helpers.

Tagged binary layout:
    1 byte type tag, then each field as a u32 big-endian length followed by the field bytes.
"""

import hashlib
import json
import os
import struct
import sys
from typing import Iterable, List

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config
import faith_log_debug
import faith_log_info
from faith_errors import InvalidEncodingError

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

# Set length of log file separator
log_separator_length = faith_config.LOG_SEPARATOR_LENGTH

_LENGTH = struct.Struct(">I")

# -------------------------------------------------------------------------
def log_separator_info(logger):
    """
    Log a separator line of "=" for visual separation in log files at INFO level.

    Args:
        logger (logging.Logger): Logger object to which the separator should be logged.
    """
    logger.info("=" * log_separator_length)

# -------------------------------------------------------------------------
def log_separator_debug(logger):
    """
    Log a separator line of "=" at DEBUG level.
    """
    logger.debug("=" * log_separator_length)

# -------------------------------------------------------------------------
def log_separator_data(logger):
    """
    Log a separator line of "-" at DEBUG level, used around bulky data dumps.
    """
    logger.debug("-" * log_separator_length)

# -------------------------------------------------------------------------
def canonical_json(obj) -> str:
    """
    Serialize `obj` to canonical JSON: sorted keys, no insignificant whitespace, ASCII only.

    The same object always produces the same string, which is what digests and the ledger's
    tamper check rely on.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)

# -------------------------------------------------------------------------
def sha3_digest(tag: bytes, *parts: bytes) -> bytes:
    """
    Domain-separated SHA3-256 over length-prefixed parts.
    """
    hasher = hashlib.sha3_256()
    hasher.update(_LENGTH.pack(len(tag)) + tag)
    for part in parts:
        hasher.update(_LENGTH.pack(len(part)))
        hasher.update(part)
    return hasher.digest()

# -------------------------------------------------------------------------
def pack_tagged(tag: int, fields: Iterable[bytes]) -> bytes:
    """
    Encode `fields` under a one-byte type tag using length-prefixed fields.
    """
    out = bytearray([tag])
    for field in fields:
        out += _LENGTH.pack(len(field))
        out += field
    return bytes(out)

# -------------------------------------------------------------------------
def unpack_tagged(data: bytes, expected_tag: int, expected_fields: int = -1) -> List[bytes]:
    """
    Decode a tagged record produced by `pack_tagged`.

    Raises:
        InvalidEncodingError: wrong tag, truncated field, trailing bytes or wrong field count.
    """
    if not data:
        raise InvalidEncodingError("empty record")
    if data[0] != expected_tag:
        raise InvalidEncodingError(f"unexpected type tag 0x{data[0]:02x}, wanted 0x{expected_tag:02x}")

    fields = []
    offset = 1
    while offset < len(data):
        if offset + _LENGTH.size > len(data):
            raise InvalidEncodingError("truncated field length")
        (length,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        if offset + length > len(data):
            raise InvalidEncodingError("truncated field")
        fields.append(bytes(data[offset:offset + length]))
        offset += length

    if expected_fields >= 0 and len(fields) != expected_fields:
        raise InvalidEncodingError(f"expected {expected_fields} fields, found {len(fields)}")
    return fields

# -------------------------------------------------------------------------
def int_to_bytes(value: int, length: int) -> bytes:
    return value.to_bytes(length, "big")

# -------------------------------------------------------------------------
def bytes_to_int(data: bytes) -> int:
    return int.from_bytes(data, "big")

# -------------------------------------------------------------------------
def is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0

# -------------------------------------------------------------------------
def ensure_directory(path: str) -> str:
    """
    Create `path` (and parents) when missing and return its absolute form.
    """
    path = os.path.abspath(path)
    os.makedirs(path, exist_ok=True)
    return path

# -------------------------------------------------------------------------
def write_file_atomic(path: str, data: bytes):
    """
    Write `data` to `path` through a temporary file and a rename.
    """
    tmp_path = path + ".tmp"
    with open(tmp_path, "wb") as handle:
        handle.write(data)
    os.replace(tmp_path, path)
    logger_debug.debug("Wrote %d bytes to %s", len(data), path)

# -------------------------------------------------------------------------
def read_file(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()
