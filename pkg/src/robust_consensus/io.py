"""CSV and JSON writers with a provenance header.

Every CSV starts with ``#``-prefixed ``key: value`` lines (config hash, seed and
any other metadata) followed by a header row.  Floats are written with 17
significant digits so that files round-trip exactly and repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .engine import TrialBatch

__all__ = [
    "format_value",
    "csv_text",
    "write_csv",
    "read_csv",
    "write_json",
    "trajectory_rows",
    "summary_rows",
    "TRAJECTORY_COLUMNS",
    "SUMMARY_COLUMNS",
    "ENSEMBLE_COLUMNS",
]

TRAJECTORY_COLUMNS = ("trial", "t", "node", "value")
SUMMARY_COLUMNS = ("trial", "theta_hat", "dispersion_final", "seed")
ENSEMBLE_COLUMNS = ("t", "cov_norm", "mean_dispersion", "analytic_norm", "rel_err")


def format_value(v) -> str:
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
        return format(v, ".17g")
    return str(v)


def csv_text(columns, rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    for key, val in (meta or {}).items():
        buf.write(f"# {key}: {format_value(val) if not isinstance(val, (dict, list)) else json.dumps(val, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns, rows, meta))
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Return ``(meta, rows)``; values stay strings."""
    meta, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            meta[key] = val
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(payload))
    return path


def trajectory_rows(batch: TrialBatch, nodes=None):
    """Rows ``(trial, t, node, value)`` for every checkpoint of every trial."""
    n = batch.states.shape[-1]
    nodes = range(n) if nodes is None else list(nodes)
    for m, trial in enumerate(batch.trials):
        for k, t in enumerate(batch.times):
            for i in nodes:
                yield (int(trial), int(t), int(i), float(batch.states[m, k, i]))


def summary_rows(batch: TrialBatch):
    disp = batch.dispersion[:, -1]
    theta = batch.theta_hat
    for m, trial in enumerate(batch.trials):
        yield (int(trial), float(theta[m]), float(disp[m]), int(batch.seed))
