"""JSON serialisation with fixed 17-significant-digit reals.

Scriptable consumers diff CLI output across runs and implementations, so the
float rendering must be deterministic and lossless; '%.17g' round-trips every
IEEE double.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["dumps17"]


def _render(obj) -> str:
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if x != x or x in (float("inf"), float("-inf")):
            return "null"
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        inner = ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        return "[" + ", ".join(_render(v) for v in seq) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps17(obj) -> str:
    return _render(obj)
