"""Strict JSON configuration handling with canonical digests.

Configs round-trip losslessly (Python's float repr is shortest-round-trip, so
doubles survive bit-exactly) and unknown fields are rejected outright.
"""

from __future__ import annotations

import hashlib
import json

from .errors import ConfigError

SCHEMA_VERSION = 1


def require_keys(obj: dict, allowed: set, optional: set = frozenset(), context: str = ""):
    """Rejects unknown keys and missing required keys."""
    if not isinstance(obj, dict):
        raise ConfigError(f"{context or 'object'} must be a JSON object, got {type(obj).__name__}")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown fields in {context or 'object'}: {sorted(unknown)}")
    missing = set(allowed) - set(optional) - set(obj)
    if missing:
        raise ConfigError(f"missing fields in {context or 'object'}: {sorted(missing)}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:12]


def load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
