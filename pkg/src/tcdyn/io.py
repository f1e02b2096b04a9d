"""Deterministic CSV / JSON writers with self-describing headers."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if v is None:
        return ""
    s = str(v)
    if "," in s or "\n" in s:
        raise ValueError(f"CSV field contains a separator: {s!r}")
    return s


def write_csv(path: Path, columns: list[tuple[str, str, str]], rows, meta: dict | None = None,
              config_text: str | None = None) -> Path:
    """columns: (name, unit, description); unit is one of Delta, 1/Delta, dimensionless, ..."""
    path = Path(path)
    out = []
    for k, v in (meta or {}).items():
        out.append(f"# {k}: {v}")
    if config_text:
        out.append("# config:")
        out += [f"#   {ln}" if ln else "#" for ln in config_text.rstrip("\n").split("\n")]
    out.append("# columns:")
    out += [f"#   {name} [{unit}]: {desc}" for name, unit, desc in columns]
    out.append(",".join(c[0] for c in columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the column list")
        out.append(",".join(fmt_value(v) for v in row))
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x if x is None or isinstance(x, str) else str(x)


def write_json(path: Path, data: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
