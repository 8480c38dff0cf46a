"""CSV and JSON-lines writers. Floats are written with ``repr`` so files
round-trip exactly and identical runs give identical bytes."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

OCCUPANCY_HEADER = ("t", "j", "q_j")
TAGGED_HEADER = ("server", "t", "x")
FIXED_POINT_HEADER = ("j", "q_star")
SWEEP_HEADER = ("n", "p", "mean_sup2", "stderr", "product")
COVARIANCE_HEADER = ("i", "j", "cov", "stderr", "reps")
COMPARE_HEADER = (
    "family", "n", "param", "seeds", "sup_l1_mean_path", "mean_sup_l1", "stderr_sup_l1", "condition1",
)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row[k] for k in header]
            w.writerow([_fmt(v) for v in row])
    return path


def read_rows(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def occupancy_rows(times, occupancy):
    """Long-format ``t,j,q_j`` rows from a ``(len(times), B+1)`` array."""
    for t, row in zip(np.asarray(times).tolist(), np.asarray(occupancy).tolist()):
        for j, v in enumerate(row):
            yield (t, j, v)


def write_occupancy(path, times, occupancy) -> Path:
    return write_rows(path, OCCUPANCY_HEADER, occupancy_rows(times, occupancy))


def read_occupancy(path) -> tuple[np.ndarray, np.ndarray]:
    rows = read_rows(path)
    ts = sorted({float(r["t"]) for r in rows})
    jmax = max(int(r["j"]) for r in rows)
    index = {t: k for k, t in enumerate(ts)}
    out = np.zeros((len(ts), jmax + 1))
    for r in rows:
        out[index[float(r["t"])], int(r["j"])] = float(r["q_j"])
    return np.array(ts), out


def write_tagged(path, tagged_paths: dict) -> Path:
    rows = ((s, t, x) for s in sorted(tagged_paths) for t, x in tagged_paths[s])
    return write_rows(path, TAGGED_HEADER, rows)


def write_fixed_point(path, q) -> Path:
    return write_rows(path, FIXED_POINT_HEADER, enumerate(np.asarray(q).tolist()))


def append_manifest(path, record: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a") as fh:
        fh.write(json.dumps(record, sort_keys=True, default=_json_default) + "\n")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, Path):
        return str(o)
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
