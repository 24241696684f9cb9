"""Canonical JSON serialization.

Every artifact this package writes (snapshots, prior exports, check
results) goes through one writer so identical state always serializes to
identical bytes, no matter which entry point produced it. Numbers rely
on repr-based float formatting, which round-trips exactly; NaN and
infinity are refused rather than emitted as invalid JSON.
"""

import json

import numpy as np


def jsonable(obj):
    """Recursively convert numpy scalars/arrays to plain Python values."""
    if isinstance(obj, np.ndarray):
        return [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {key: jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    return obj


def dumps_canonical(obj) -> str:
    """Serialize to the one canonical text form: 2-space indent, utf-8
    friendly, key order preserved, trailing newline."""
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def dump_canonical_bytes(obj) -> bytes:
    return dumps_canonical(obj).encode("utf-8")
