"""Bit-stable output: every float is written with 17 significant digits."""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

FLOAT_FORMAT = ".17g"
DEFAULT_OUT_DIR = "bore_out"


def format_float(x: float) -> str:
    return format(float(x), FLOAT_FORMAT)


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return format_float(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats in ``%.17g`` form (non-finite floats become strings)."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def csv_text(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    cols = [np.asarray(columns[n]).ravel() for n in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns must have equal length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_cell(c[i]) for c in cols))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)) and not isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return format_float(v)


def write_csv(path: str | Path, columns: dict[str, np.ndarray]) -> Path:
    """CSV with a header line naming the columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns), encoding="utf-8")
    return path


def output_directory(configured: str | None = None) -> Path:
    """``BORE_OUT_DIR`` wins over the configured directory."""
    env = os.environ.get("BORE_OUT_DIR")
    if env:
        return Path(env)
    return Path(configured or DEFAULT_OUT_DIR)
