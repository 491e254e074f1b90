"""CSV and JSON serialization of measures, plans and derived tables.

Floats are written with ``repr`` so a write/read round trip reproduces
every finite double exactly. Lines starting with ``#`` are provenance
comments and are skipped on read.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .measures import DiscreteMeasure

FIRM_COLUMNS = ("z", "alpha1", "alpha2")
WORKER_COLUMNS = ("x1", "x2")


class InputError(ValueError):
    """Malformed or missing input file; the message names the path."""


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise InputError(f"{path}: empty file")
    return [h.strip() for h in rows[0]], rows[1:]


def write_table(path, header, columns, comment: str | None = None):
    """Write equal-length columns under ``header``."""
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(header) or len({len(c) for c in cols}) > 1:
        raise ValueError("header and columns do not line up")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a numeric CSV."""
    header, rows = _read_rows(path)
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise InputError(f"{path}: rows do not match the {len(header)}-column header")
    return header, data


def measure_columns(points_dim: int, kind: str = "generic") -> tuple[str, ...]:
    if kind == "firms":
        return FIRM_COLUMNS
    if kind == "workers":
        return WORKER_COLUMNS
    return tuple(f"c{k + 1}" for k in range(points_dim))


def write_measure(path, measure: DiscreteMeasure, kind: str = "generic", comment=None):
    cols = measure_columns(measure.dim, kind)
    if len(cols) != measure.dim:
        raise ValueError(f"{kind} measures need {len(cols)} coordinates, got {measure.dim}")
    write_table(path, (*cols, "weight"), [*measure.points.T, measure.weights], comment)


def read_measure(path) -> DiscreteMeasure:
    """Read any of the firm, worker or generic measure layouts; the last
    column must be ``weight``."""
    header, data = read_table(path)
    if header[-1] != "weight" or len(header) < 2:
        raise InputError(f"{path}: last column must be 'weight', got header {header}")
    known = {FIRM_COLUMNS, WORKER_COLUMNS,
             tuple(f"c{k + 1}" for k in range(len(header) - 1))}
    if tuple(header[:-1]) not in known:
        raise InputError(f"{path}: unrecognized coordinate columns {header[:-1]}")
    try:
        return DiscreteMeasure(data[:, :-1], data[:, -1])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_plan(path, P, comment=None):
    """Dense plan, one row per firm type, header = worker indices."""
    P = np.asarray(P, dtype=float)
    header = [str(j) for j in range(P.shape[1])]
    write_table(path, header, list(P.T), comment)


def read_plan(path) -> np.ndarray:
    header, data = read_table(path)
    if header != [str(j) for j in range(len(header))]:
        raise InputError(f"{path}: plan header must be 0..m-1")
    return data


def write_trace(path, trace, comment=None):
    t = np.asarray(trace, dtype=float).reshape(-1, 3)
    write_table(path, ("iter", "objective", "ugap"),
                [t[:, 0].astype(int), t[:, 1], t[:, 2]], comment)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text + "\n")
    os.replace(tmp, path)


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
