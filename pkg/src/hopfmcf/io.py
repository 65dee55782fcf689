"""File output: flow records, 4D torus frames, stereographic OBJ and reports."""

import csv
import json
import math

import numpy as np

from .flow import FlowRecord
from .sphere import fiber_point, horizontal_basis, j_mul, phase_rotate

__all__ = [
    "write_records",
    "read_records",
    "write_v4",
    "read_v4",
    "stereographic",
    "default_center",
    "write_obj",
    "write_json",
]

FMT = "%.17g"


def write_records(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FlowRecord.FIELDS)
        for r in records:
            w.writerow([FMT % v for v in r.as_row()])


def read_records(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != FlowRecord.FIELDS:
        raise ValueError("unexpected header %r" % (rows[0],))
    return [FlowRecord(*map(float, row)) for row in rows[1:]]


def write_v4(mesh, path):
    """Vertices "a b c d" of the seam-stitched grid, then "f i j k l" quads (0-based)."""
    verts = mesh.stitched_grid().reshape(-1, 4)
    quads = mesh.quads()
    with open(path, "w") as fh:
        fh.write("# hopf torus frame t=%s R=%s n_beta=%d n_v=%d\n" % (FMT % mesh.t_stamp, FMT % mesh.R, mesh.n_beta, mesh.n_v))
        np.savetxt(fh, verts, fmt=FMT)
        np.savetxt(fh, quads, fmt="f %d %d %d %d")


def read_v4(path):
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            if line.startswith("f "):
                faces.append([int(v) for v in line.split()[1:]])
            else:
                verts.append([float(v) for v in line.split()])
    return np.array(verts), np.array(faces, dtype=int)


def stereographic(points, q):
    """Stereographic projection of unit 4-vectors from the pole -q into R^3.

    Coordinates are taken in the basis {Jq, e1, e2} of the tangent space at q,
    so q goes to the origin and its Hopf fiber to the first axis.
    """
    q = np.asarray(q, dtype=float)
    basis = np.stack([j_mul(q), *horizontal_basis(q)])
    p = np.asarray(points, dtype=float)
    denom = 1.0 + p @ q
    if np.any(denom < 1e-12):
        raise ValueError("a vertex sits at the projection pole")
    return (p @ basis.T) / denom[:, None]


def default_center(unit_vertices):
    """A q whose antipode -q is far from every vertex.

    Candidates are the fiber points over the six axis points of S^2(1/2),
    each at four phases; the one maximizing the distance from -q to the mesh wins.
    """
    axes = np.vstack([np.eye(3), -np.eye(3)]) * 0.5
    cands = phase_rotate(fiber_point(axes, 1.0)[:, None, :], (np.pi / 2) * np.arange(4)[None, :]).reshape(-1, 4)
    gap = [np.min(np.linalg.norm(unit_vertices + c, axis=1)) for c in cands]
    return cands[int(np.argmax(gap))]


def write_obj(mesh, path, q=None):
    """OBJ of the torus rescaled to S^3(1) and projected from -q.

    ``q`` defaults to :func:`default_center` of the mesh.
    """
    unit = mesh.stitched_grid().reshape(-1, 4) / mesh.R
    if q is None:
        q = default_center(unit)
    verts = stereographic(unit, q)
    with open(path, "w") as fh:
        fh.write("# stereographic image of a hopf torus frame, t=%s\n" % (FMT % mesh.t_stamp))
        np.savetxt(fh, verts, fmt="v %.12g %.12g %.12g")
        np.savetxt(fh, mesh.quads() + 1, fmt="f %d %d %d %d")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(data, path):
    """JSON with non-finite floats written as null / "inf"."""
    with open(path, "w") as fh:
        json.dump(_clean(data), fh, indent=2, allow_nan=False)
        fh.write("\n")
