# lphard/config.py
import hashlib
import json
import logging
import os
from configparser import ConfigParser
from logging.config import fileConfig
from typing import Any, Dict, Optional

from dotenv import load_dotenv

load_dotenv()

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir))

PRECISION_BITS = int(os.getenv("LPHARD_PRECISION_BITS", "128"))
RANK_CAP = int(os.getenv("LPHARD_RANK_CAP", "14"))
COEFF_BOX = int(os.getenv("LPHARD_COEFF_BOX", "1000000"))
ORACLE_SECONDS = float(os.getenv("LPHARD_ORACLE_SECONDS", "0"))
MAX_CELLS = int(os.getenv("LPHARD_MAX_CELLS", str(1 << 24)))
MAX_SHIFT_DENOMINATOR = int(os.getenv("LPHARD_MAX_SHIFT_DENOMINATOR", "1024"))

log = logging.getLogger(__name__)


def resolve_logging_config(explicit: Optional[str] = None) -> Optional[str]:
    """
    Resolution order:
      0) explicit path (the CLI's --log-config)
      1) LPHARD_LOGGING_INI environment variable
      2) logging.ini at the project root
      3) logging.local.ini at the project root (optional, kept out of git)
    Returns None when nothing is found.
    """
    candidates = [
        explicit,
        os.getenv("LPHARD_LOGGING_INI"),
        os.path.join(PROJECT_ROOT, "logging.ini"),
        os.path.join(PROJECT_ROOT, "logging.local.ini"),
    ]
    for path in candidates:
        if path and os.path.exists(path):
            return path
    return None


def configure_logging(explicit: Optional[str] = None) -> Optional[str]:
    """Apply the resolved ini if it carries logging sections. Returns the path used."""
    path = resolve_logging_config(explicit)
    if not path:
        return None
    try:
        cp = ConfigParser()
        cp.read(path)
        if not cp.has_section("formatters"):
            return None
        fileConfig(path, disable_existing_loggers=False)
    except Exception:
        # A minimal ini without usable logging sections is not fatal
        return None
    log.debug("logging configured from %s", path)
    return path


def settings_snapshot() -> Dict[str, Any]:
    return {
        "precision_bits": PRECISION_BITS,
        "rank_cap": RANK_CAP,
        "coeff_box": COEFF_BOX,
        "oracle_seconds": ORACLE_SECONDS,
        "max_cells": MAX_CELLS,
        "max_shift_denominator": MAX_SHIFT_DENOMINATOR,
    }


def config_hash(extra: Optional[Dict[str, Any]] = None) -> str:
    """Short digest of the effective settings merged with per-run values."""
    payload = dict(settings_snapshot())
    if extra:
        payload.update(extra)
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
