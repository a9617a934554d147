"""
faith_output.py

Console output for the CLI: grid tables via tabulate for people, a single JSON document on
stdout with --json for scripts.  Errors go to stderr unless --json is set.
"""

import json
import os
import sys
from typing import Iterable, Optional, Sequence

from tabulate import tabulate

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config
import faith_log_info
from faith_errors import FaithError

# Create an alias for convenience
logger_info = faith_log_info.logger

ok_color = faith_config.VERIFY_OK_COLOR
fail_color = faith_config.VERIFY_FAIL_COLOR
color_reset = faith_config.TERMINAL_COLOR_RESET

# -------------------------------------------------------------------------
def _color(text: str, color: str) -> str:
    if not sys.stdout.isatty():
        return text
    return f"{color}{text}{color_reset}"

# -------------------------------------------------------------------------
def emit(args, payload: dict, rows: Optional[Iterable[Sequence]] = None, headers: Optional[Sequence[str]] = None):
    """
    Print `payload` as JSON with --json, otherwise a grid table (`rows` when given, else the
    payload's key/value pairs).
    """
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))
        return
    if rows is None:
        rows = [(key, _format_value(value)) for key, value in payload.items()]
        headers = ("field", "value")
    print(tabulate(list(rows), headers=headers or (), tablefmt="grid"))

def _format_value(value) -> str:
    if isinstance(value, bool):
        return _color("yes", ok_color) if value else _color("no", fail_color)
    if isinstance(value, (list, tuple)):
        return ", ".join(str(item) for item in value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True)
    return str(value)

# -------------------------------------------------------------------------
def emit_verification(args, grant_id: str, ok: bool, reason: str = "", detail: str = ""):
    payload = {"grant_id": grant_id, "ok": ok, "reason": reason, "detail": detail}
    if getattr(args, "json", False):
        emit(args, payload)
    elif ok:
        print(_color(f"Grant {grant_id}: verification passed", ok_color))
    else:
        print(_color(f"Grant {grant_id}: verification FAILED ({reason})", fail_color))
        if detail:
            print(f"  {detail}")

# -------------------------------------------------------------------------
def emit_error(args, error: FaithError):
    payload = {"ok": False, **error.to_dict()}
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(_color(f"Error ({error.code}): {error}", fail_color), file=sys.stderr)
    logger_info.error("Command failed with %s: %s", error.code, error)
