"""CSV and JSON readers/writers used by the command line.

Floats are written with 17 significant digits so files round-trip exactly
and repeated runs give byte-identical output.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = ["format_float", "dumps_json", "write_json", "write_csv", "read_csv"]


def format_float(v: float) -> str:
    return "%.17g" % v


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format_float(v) if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return _quote(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_quote(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__} as JSON")


def _quote(s: str) -> str:
    return json.dumps(s)


def dumps_json(obj, indent: int = 2) -> str:
    """Deterministic JSON text: insertion-ordered keys, %.17g floats, NaN as null."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj))
    return path


def write_csv(path, header: list[str], columns, comments: list[str] = ()) -> Path:
    """Write equal-length columns under a header line, with optional ``#`` comments first."""
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(header) or len({c.shape for c in cols}) > 1:
        raise InputError("CSV columns must match the header and each other in length")
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in zip(*cols):
        lines.append(",".join(_cell(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def read_csv(path, columns: list[str]) -> dict[str, np.ndarray]:
    """Read numeric columns by name; ``#`` lines and blank lines are skipped.

    Raises:
        InputError: missing file, missing columns, or non-numeric cells.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise InputError(f"{path}: no header line")
    header = [h.strip() for h in rows[0].split(",")]
    missing = [c for c in columns if c not in header]
    if missing:
        raise InputError(f"{path}: missing column(s) {', '.join(missing)}; found {', '.join(header)}")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric cell ({exc})") from exc
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != len(header):
        raise InputError(f"{path}: expected {len(header)} values per row")
    return {c: data[:, header.index(c)] for c in columns}
