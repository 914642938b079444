"""CSV/JSON serialisation of grids, masks and fields.

Grid data is written one row per lattice node (index, x, y, mask, value)
with a JSON header holding kind, lengths, points and h. Floats use 17
significant digits and '.' decimals so files round-trip exactly.
"""
import csv
import json

import numpy as np

from .geometry import build_grid

GRID_COLUMNS = ("index", "x", "y", "mask", "value")


def fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return "%.17g" % float(v)


def write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            vals = [row[c] for c in columns] if isinstance(row, dict) else row
            w.writerow([fmt(v) for v in vals])


def write_grid_csv(path, grid, mask, values):
    """One row per node; 1-D grids write y = 0."""
    coords = grid.mesh()
    x = coords[0].ravel()
    y = coords[1].ravel() if grid.ndim == 2 else np.zeros_like(x)
    m = np.asarray(mask, dtype=bool).ravel()
    v = np.asarray(values, dtype=float).ravel()
    rows = ((i, x[i], y[i], int(m[i]), v[i]) for i in range(x.size))
    write_rows(path, GRID_COLUMNS, rows)


def read_grid_csv(path, grid):
    data = np.genfromtxt(path, delimiter=",", names=True)
    mask = data["mask"].astype(bool).reshape(grid.shape)
    return mask, data["value"].reshape(grid.shape)


def write_header(path, grid, extra=None):
    head = grid.header()
    if extra:
        head.update(extra)
    with open(path, "w") as fh:
        json.dump(head, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_header(path):
    with open(path) as fh:
        head = json.load(fh)
    grid = build_grid(head["kind"], head["lengths"], head["points"], head.get("origin"))
    return grid, head


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def _clean(o):
    """Non-finite floats become strings so the output stays strict JSON."""
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    if isinstance(o, (float, np.floating)) and not np.isfinite(o):
        return "nan" if np.isnan(o) else ("inf" if o > 0 else "-inf")
    return o


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    return str(o)
