import json
import logging
import os
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd
from dotenv import load_dotenv

from errors import UsageError

load_dotenv()

# --- CONFIGURATION ---
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
ZERO_CACHE_COLUMNS = [
    "kernel",
    "re",
    "im",
    "residual",
    "E_re",
    "E_im",
    "method",
    "verified_count",
]
DEDUP_TOL = 1e-7


def setup_logger(level=None):
    """
    Configures the root logger once: stderr only, so stdout stays
    machine-readable for the CLI.
    """
    level = level or os.getenv("ZHL_LOG_LEVEL", "WARNING")
    root = logging.getLogger()
    if not any(getattr(h, "_zhl", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        handler._zhl = True
        root.addHandler(handler)
    root.setLevel(str(level).upper())
    return root


def env_float(name, default=None):
    raw = os.getenv(name)
    if raw in (None, ""):
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise UsageError(f"{name} must be a number, got {raw!r}") from e


def env_int(name, default=None):
    raw = os.getenv(name)
    if raw in (None, ""):
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from e


def get_thread_count():
    """ZHL_THREADS caps parallelism; defaults to the CPU count."""
    threads = env_int("ZHL_THREADS", os.cpu_count() or 1)
    if threads < 1:
        raise UsageError(f"ZHL_THREADS must be >= 1, got {threads}")
    return threads


# --- COMPLEX TEXT FORMAT ---
_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"^\s*(?P<re>[+-]?\s*{_NUMBER})\s*(?P<sign>[+-])\s*(?P<im>{_NUMBER})?\s*[ij]\s*$"
)
_REAL_RE = re.compile(rf"^\s*(?P<re>[+-]?\s*{_NUMBER})\s*$")


def parse_complex(text):
    """Parse "a+bi" / "a-bi" (spaces allowed); a bare real is also accepted."""
    match = _COMPLEX_RE.match(text)
    if match:
        real = float(match.group("re").replace(" ", ""))
        imag = float(match.group("im") or 1.0)
        if match.group("sign") == "-":
            imag = -imag
        return complex(real, imag)
    match = _REAL_RE.match(text)
    if match:
        return complex(float(match.group("re").replace(" ", "")), 0.0)
    raise UsageError(f"cannot parse complex number {text!r}; expected 'a+bi'")


def timestamp():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# --- JSON HELPERS ---
def read_json(path):
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise UsageError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"invalid JSON in {path}: {e}") from e


def write_json(path, data):
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)


def dumps_json(data):
    """Stable serialisation: sorted keys, no whitespace drift."""
    return json.dumps(data, sort_keys=True)


# --- ZERO CACHE (CSV) ---
def load_zero_cache(path):
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return pd.DataFrame(columns=ZERO_CACHE_COLUMNS)
    frame = pd.read_csv(path)
    missing = set(ZERO_CACHE_COLUMNS) - set(frame.columns)
    if missing:
        raise UsageError(f"zero cache {path} lacks columns {sorted(missing)}")
    return frame[ZERO_CACHE_COLUMNS]


def _is_cached(frame, row):
    same = frame[frame["kernel"] == row["kernel"]]
    if same.empty:
        return False
    close = ((same["re"] - row["re"]).abs() < DEDUP_TOL) & (
        (same["im"] - row["im"]).abs() < DEDUP_TOL
    )
    return bool(close.any())


def append_zero_cache(path, rows):
    """
    Append rows (dicts keyed by ZERO_CACHE_COLUMNS) that are not already cached.
    The file is only ever appended to. Returns the number of rows written.
    """
    path = Path(path)
    existing = load_zero_cache(path)
    fresh = []
    for row in rows:
        if _is_cached(existing, row) or any(
            r["kernel"] == row["kernel"]
            and abs(r["re"] - row["re"]) < DEDUP_TOL
            and abs(r["im"] - row["im"]) < DEDUP_TOL
            for r in fresh
        ):
            continue
        fresh.append(row)
    if not fresh:
        return 0
    write_header = not path.exists() or path.stat().st_size == 0
    pd.DataFrame(fresh, columns=ZERO_CACHE_COLUMNS).to_csv(
        path, mode="a", header=write_header, index=False
    )
    logging.getLogger(__name__).info(f"💾 Cached {len(fresh)} zeros in {path}")
    return len(fresh)
