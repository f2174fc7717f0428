"""Deterministic JSON emission with floats at 17 significant digits."""

from __future__ import annotations

import json

import numpy as np

__all__ = ["fmt_float", "dump_json"]


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def dump_json(obj, indent=0) -> str:
    """Serialize nested dicts/lists/scalars; floats carry 17 significant digits.

    Insertion order of dicts is preserved, so byte-identical output follows
    from deterministic construction.
    """
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(f"{inner}{json.dumps(str(k))}: {dump_json(v, indent + 2)}"
                           for k, v in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple)) for v in obj)
        if flat:
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        items = ",\n".join(f"{inner}{dump_json(v, indent + 2)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    return json.dumps(obj)
