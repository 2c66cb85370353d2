"""Deterministic JSON writing.

Reports must be byte-identical across runs with the same seed, and floats
must survive a serialize/parse round trip exactly, so floats are written
with 17 significant digits and key order is the insertion order of the
document builders.
"""

from __future__ import annotations

import json
import math


def _format(value, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close_pad = " " * (indent * level)
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite float {value}")
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = ",\n".join(
            f"{pad}{json.dumps(str(k))}: {_format(v, indent, level + 1)}"
            for k, v in value.items()
        )
        return "{\n" + items + "\n" + close_pad + "}"
    if isinstance(value, (list, tuple)):
        if not len(value):
            return "[]"
        items = ",\n".join(f"{pad}{_format(v, indent, level + 1)}" for v in value)
        return "[\n" + items + "\n" + close_pad + "]"
    # numpy scalars and arrays
    if hasattr(value, "item") and getattr(value, "ndim", None) == 0:
        return _format(value.item(), indent, level)
    if hasattr(value, "tolist"):
        return _format(value.tolist(), indent, level)
    raise TypeError(f"cannot serialize {type(value)!r}")


def dump_json(doc: dict, indent: int = 2) -> str:
    """Render a document deterministically; trailing newline included."""
    return _format(doc, indent, 0) + "\n"
