"""Deterministic, atomic output and schema validation.

Floats are written with ``repr`` (shortest round-trip form), JSON keys keep
insertion order, and every file is written to a temporary sibling and then
renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = ["atomic_write", "dumps_json", "write_json", "write_csv",
           "load_schema", "validate_json", "to_jsonable"]


def to_jsonable(obj):
    """Convert numpy scalars, arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj, schema: str | None = None):
    data = to_jsonable(obj)
    if schema is not None:
        validate_json(data, schema)
    atomic_write(path, dumps_json(data))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("dimerwave.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_json(data, name: str):
    """Raise jsonschema.ValidationError if ``data`` violates schema ``name``."""
    import jsonschema

    jsonschema.validate(to_jsonable(data), load_schema(name))
