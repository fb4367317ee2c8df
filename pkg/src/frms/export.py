"""CSV and JSON writers with a config-hash header and fixed float format."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["fmt", "write_csv", "write_json", "read_csv", "jsonable"]


def fmt(x) -> str:
    """Locale-independent text with 17 significant digits for floats."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_sha256: {config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """Returns ``(config_hash, header, rows)``."""
    with Path(path).open(encoding="utf-8") as fh:
        first = fh.readline().strip()
        rows = list(csv.reader(fh))
    return first.split(":", 1)[1].strip(), rows[0], rows[1:]


def jsonable(obj):
    """Replace numpy scalars, tuples and non-finite floats by JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


def write_json(path, payload: dict, config_hash: str) -> Path:
    """JSON has no comments, so the hash is the leading ``_config_hash`` field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"_config_hash": config_hash}
    body.update(jsonable(payload))
    path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    return path
