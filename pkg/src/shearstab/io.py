"""Deterministic JSON and CSV emission."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

import numpy as np


def to_jsonable(obj):
    """Convert numpy scalars/arrays and complex numbers into plain JSON types.

    Complex numbers become ``{"re": ..., "im": ...}``.  Non-finite floats are
    rejected so that output always parses as strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(obj.real)), "im": to_jsonable(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} cannot be written as JSON")
        return x
    return obj


def dumps_json(obj) -> str:
    """Serialize with stable key order; floats use the shortest round-trip form."""
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_text(text: str, path=None, stream=None) -> None:
    if path is None or str(path) == "-":
        stream.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
