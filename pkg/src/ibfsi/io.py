"""Plain-text artifact writers: CSV tables, legacy-VTK snapshots, marker dumps.

Floats are written in their shortest round-trip decimal form so that
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grid import FaceField


def fmt(x):
    """Shortest round-trip text for a scalar (ints and strings pass through)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    """Write ``rows`` (iterables matching ``header``) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def read_csv(path):
    """Read a CSV written by :func:`write_csv` into ``(header, float array)``."""
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return header, np.array([[float(v) for v in r] for r in body]) if body else np.zeros((0, len(header)))


def flatten_record(prefix, rec):
    """Flatten a dict of scalars and small arrays into ``{name: scalar}``."""
    out = {}
    for k, v in rec.items():
        if isinstance(v, str):
            continue
        a = np.asarray(v)
        if a.ndim == 0:
            out[f"{prefix}{k}"] = a.item()
        elif a.size == 2:
            out[f"{prefix}{k}_x"], out[f"{prefix}{k}_y"] = (float(c) for c in a)
    return out


class TimeSeries:
    """Row accumulator with a column set fixed by the first row."""

    def __init__(self):
        self.header = None
        self.rows = []

    def append(self, row):
        if self.header is None:
            self.header = list(row)
        self.rows.append([row.get(k, float("nan")) for k in self.header])

    def column(self, name):
        i = self.header.index(name)
        return np.array([r[i] for r in self.rows], float)

    def write(self, path):
        return write_csv(path, self.header or [], self.rows)


def cell_velocity(u):
    """Face velocity averaged to cell centres, shape ``(nx, ny, 2)``."""
    return np.stack([0.5 * (u.u[1:] + u.u[:-1]), 0.5 * (u.v[:, 1:] + u.v[:, :-1])], -1)


def write_vtk(path, g, scalars=None, vectors=None, title="ibfsi snapshot"):
    """Legacy-VTK ASCII structured points with cell data.

    ``scalars`` maps names to ``(nx, ny)`` arrays; ``vectors`` maps names to
    face fields or ``(nx, ny, 2)`` arrays.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx, ny = g.nx, g.ny
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx + 1} {ny + 1} 1",
        f"ORIGIN {fmt(float(g.origin[0]))} {fmt(float(g.origin[1]))} 0",
        f"SPACING {fmt(float(g.dx))} {fmt(float(g.dy))} 1",
        f"CELL_DATA {nx * ny}",
    ]
    # VTK orders points with x fastest
    for name, a in (scalars or {}).items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [fmt(v) for v in np.asarray(a, float).T.ravel()]
    for name, v in (vectors or {}).items():
        a = cell_velocity(v) if isinstance(v, FaceField) else np.asarray(v, float)
        lines.append(f"VECTORS {name} double")
        lines += [f"{fmt(x)} {fmt(y)} 0" for x, y in a.transpose(1, 0, 2).reshape(-1, 2)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_field_csv(path, g, field, name="value"):
    """Cell field as ``x, y, value`` rows."""
    xc, yc = g.cell_centers()
    return write_csv(path, ["x", "y", name], zip(xc.ravel(), yc.ravel(), np.asarray(field, float).ravel()))


def write_markers(path, markers):
    """Marker set as ``id, x, y, rx, ry, dV`` rows."""
    m = markers
    rows = ((i, X[0], X[1], r[0], r[1], w) for i, (X, r, w) in enumerate(zip(m.X, m.r, m.dV)))
    return write_csv(path, ["id", "x", "y", "rx", "ry", "dV"], rows)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)
