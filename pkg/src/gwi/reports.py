"""Deterministic CSV/JSON writers shared by every report producer.

Data files never contain timestamps or host details; those go to a sidecar
``<name>.meta.json`` so that rerunning a config reproduces the data byte for
byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np


def fmt(v: Any) -> str:
    """Render one CSV cell; floats get 17 significant digits (round-trip exact)."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    if v is None:
        return ""
    return str(v)


def _jsonable(v: Any):
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan literals; keep them readable as strings
        return v if math.isfinite(v) else fmt(v)
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    return v


def csv_text(meta: Mapping[str, Any], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """``# key=value`` metadata lines, a mandatory header row, then the data."""
    buf = io.StringIO(newline="")
    for k, v in meta.items():
        if isinstance(v, (Mapping, list, tuple)):
            v = json.dumps(_jsonable(v), sort_keys=True, separators=(",", ":"))
        else:
            v = fmt(v)
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows([fmt(c) for c in row] for row in rows)
    return buf.getvalue()


def json_text(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_text(path: os.PathLike | str, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_csv(path, meta, columns, rows) -> Path:
    return write_text(path, csv_text(meta, columns, rows))


def write_json(path, obj) -> Path:
    return write_text(path, json_text(obj))


def write_sidecar(path: os.PathLike | str, extra: Mapping[str, Any] | None = None) -> Path:
    """Volatile run metadata next to a data file."""
    path = Path(path)
    info = {
        "data_file": path.name,
        "written_at_unix": time.time(),
        "python": platform.python_version(),
        "platform": platform.platform(),
    }
    if extra:
        info.update(extra)
    return write_json(path.with_name(path.name + ".meta.json"), info)


def read_csv(path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Inverse of :func:`write_csv` (values stay as strings)."""
    meta: dict[str, str] = {}
    body: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# ") and not body:
                k, _, v = line[2:].rstrip("\n").partition("=")
                meta[k] = v
            else:
                body.append(line)
    table = [r for r in csv.reader(body) if r]
    return meta, (table[0] if table else []), table[1:]
