"""Small shared helpers: hashing, canonical JSON, identifier mangling."""

from __future__ import annotations

import hashlib
import json
import re
import time
from datetime import datetime, timezone
from typing import Any, Callable

Clock = Callable[[], float]


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_json(obj: Any) -> str:
    """Stable, compact JSON used for digests and wire payloads."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def pretty_json(obj: Any) -> str:
    """Stable, human-readable JSON used for files on disk."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


_SNAKE_CLEAN = re.compile(r"[^a-z0-9]+")


def snake_case(name: str) -> str:
    """Lower-case a free-form name into a snake_case identifier."""
    out = _SNAKE_CLEAN.sub("_", name.strip().lower()).strip("_")
    if not out:
        return "step"
    if out[0].isdigit():
        out = "n" + out
    return out


def unique_name(candidate: str, taken: set[str]) -> str:
    """Return candidate, suffixed with _2, _3, ... if already taken."""
    if candidate not in taken:
        return candidate
    n = 2
    while f"{candidate}_{n}" in taken:
        n += 1
    return f"{candidate}_{n}"


def iso_utc(ts: float | None = None) -> str:
    if ts is None:
        ts = time.time()
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat().replace("+00:00", "Z")
