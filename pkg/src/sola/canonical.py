"""Canonical JSON serialization shared by hashing, bundles, and the API.

Rules: lexicographically sorted keys, UTF-8, RFC 3339 UTC timestamps with a
``Z`` suffix, no insignificant whitespace. Two structurally equal values must
always serialize to identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
from datetime import date, datetime, time, timezone
from decimal import Decimal
from enum import Enum
from typing import Any


def format_instant(dt: datetime) -> str:
    """RFC 3339 with Z suffix; fractional seconds only when present."""
    if dt.tzinfo is None:
        raise ValueError("naive datetime cannot be canonicalized")
    dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_instant(text: str) -> datetime:
    if not text.endswith("Z"):
        raise ValueError(f"instant must end with Z: {text!r}")
    return datetime.fromisoformat(text[:-1]).replace(tzinfo=timezone.utc)


def to_plain(value: Any) -> Any:
    """Recursively convert domain values to JSON-ready plain data.

    Sets become sorted lists so serialization never depends on insertion
    order. Enums serialize by name, instants per format_instant.
    """
    if isinstance(value, Enum):
        return value.name
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, datetime):
        return format_instant(value)
    if isinstance(value, (date, time)):
        return value.isoformat()
    if isinstance(value, Decimal):
        return str(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(to_plain(k)): to_plain(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted(to_plain(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


def canonical_json(value: Any) -> bytes:
    plain = to_plain(value)
    return json.dumps(
        plain, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")
