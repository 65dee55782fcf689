"""Closed polygonal curves on the sphere S^2(1/2).

A :class:`SphereCurve` is an ordered cycle of points joined by minor
great-circle arcs.  Geometric quantities (geodesic curvature vectors, turning
angles, enclosed area) are computed on that piecewise-geodesic polygon, so the
area comes from the discrete Gauss-Bonnet formula and is exact for the polygon.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .sphere import cross, project_to_sphere, tangent_project

__all__ = [
    "RHO",
    "SPHERE_AREA",
    "MIN_POINTS",
    "CurveError",
    "SphereCurve",
    "CurveFamilySpec",
    "segment_lengths",
    "curvature_vectors",
    "curvature_vector",
    "turning_angles",
    "left_area",
    "enclosed_area",
    "is_simple",
    "resample",
    "make_family",
    "cap_area",
    "read_point_list",
]

RHO = 0.5
SPHERE_AREA = 4.0 * np.pi * RHO**2  # = pi
MIN_POINTS = 8
DEGENERATE_SEGMENT = 1e-12
INTERSECTION_GUARD = 1e-14


class CurveError(ValueError):
    pass


def cap_area(theta):
    """Area of the polar cap of angular radius theta on S^2(1/2)."""
    return 2.0 * np.pi * RHO**2 * (1.0 - np.cos(theta))


def _chords(points):
    return np.roll(points, -1, axis=0) - points


def segment_lengths(points, radius=RHO):
    """Geodesic length of each segment i -> i+1 (cyclic)."""
    c = np.linalg.norm(_chords(points), axis=1)
    return 2.0 * radius * np.arcsin(np.minimum(c / (2.0 * radius), 1.0))


def curvature_vectors(points, radius=RHO):
    """Discrete geodesic curvature vectors at every vertex.

    Arclength-weighted second difference of the vertices, projected onto the
    tangent plane of the sphere at each vertex.
    """
    d = _chords(points)
    ell = segment_lengths(points, radius)
    if np.any(ell < DEGENERATE_SEGMENT):
        raise CurveError("degenerate segment (length < %g)" % DEGENERATE_SEGMENT)
    fwd = d / ell[:, None]
    bwd = np.roll(fwd, 1, axis=0)
    ell_b = np.roll(ell, 1)
    k = 2.0 * (fwd - bwd) / (ell + ell_b)[:, None]
    return tangent_project(points, k)


def turning_angles(points):
    """Signed exterior angles at the vertices, positive for left turns.

    The incoming direction is the tangent of the arriving geodesic arc at the
    vertex (i.e. the arc's direction after parallel transport along it), the
    outgoing one the tangent of the leaving arc; the angle between them is
    measured about the outward normal.
    """
    n = points / np.linalg.norm(points, axis=1, keepdims=True)
    nxt = np.roll(n, -1, axis=0)
    prv = np.roll(n, 1, axis=0)
    t_out = tangent_project(n, nxt)
    t_in = -tangent_project(n, prv)
    s = np.sum(n * cross(t_in, t_out), axis=1)
    c = np.sum(t_in * t_out, axis=1)
    return np.arctan2(s, c)


def left_area(points, radius=RHO):
    """Area of the region to the left of the polygon: rho^2 (2 pi - sum of turning angles)."""
    return radius**2 * (2.0 * np.pi - np.sum(turning_angles(points)))


def _segments_cross(a, b, c, d, guard=INTERSECTION_GUARD):
    """Vectorised minor-arc intersection test on unit vectors (touching counts)."""
    n1 = cross(a, b)
    n2 = cross(c, d)
    s_c = np.sum(n1 * c, axis=-1)
    s_d = np.sum(n1 * d, axis=-1)
    s_a = np.sum(n2 * a, axis=-1)
    s_b = np.sum(n2 * b, axis=-1)

    def straddles(u, v):
        u = np.where(np.abs(u) <= guard, 0.0, u)
        v = np.where(np.abs(v) <= guard, 0.0, v)
        return u * v <= 0.0

    both = straddles(s_c, s_d) & straddles(s_a, s_b)
    # the two great circles meet at +-x; the arcs share the one on their side
    x = cross(n1, n2)
    side_ab = np.sum(x * (a + b), axis=-1)
    side_cd = np.sum(x * (c + d), axis=-1)
    same = side_ab * side_cd >= -guard
    # coincident great circles: x vanishes; call it an intersection (conservative)
    collinear = np.linalg.norm(x, axis=-1) <= guard
    return both & (same | collinear)


def _candidate_pairs(u, brute):
    n = len(u)
    if brute:
        i, j = np.triu_indices(n, k=1)
    else:
        mid = 0.5 * (u + np.roll(u, -1, axis=0))
        chord = np.linalg.norm(_chords(u), axis=1)
        # intersecting arcs have chord midpoints within max chord of each other
        pairs = cKDTree(mid).query_pairs(r=1.01 * chord.max() + 1e-12, output_type="ndarray")
        if len(pairs) == 0:
            return np.empty(0, int), np.empty(0, int)
        i, j = np.sort(pairs, axis=1).T
    keep = (j - i > 1) & ~((i == 0) & (j == n - 1))
    return i[keep], j[keep]


def is_simple(points, brute=False):
    """True iff no two non-adjacent segments of the closed polygon meet.

    Segments are minor great-circle arcs.  Touching segments count as meeting.
    The default path prunes pairs with a k-d tree on segment midpoints and then
    runs the same exact test as ``brute=True`` (all O(N^2) pairs).
    """
    pts = points.points if isinstance(points, SphereCurve) else np.asarray(points, dtype=float)
    u = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    n = len(u)
    if n < 3:
        return False
    i, j = _candidate_pairs(u, brute)
    if len(i) == 0:
        return True
    a, b = u[i], u[(i + 1) % n]
    c, d = u[j], u[(j + 1) % n]
    return not bool(np.any(_segments_cross(a, b, c, d)))


@dataclass(frozen=True, eq=False)
class SphereCurve:
    """Closed polygon on S^2(1/2).

    ``orientation`` is +1 when the enclosed region is the one to the left of
    the traversal and -1 when it is the one to the right.
    """

    points: np.ndarray
    orientation: int = 1
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise CurveError("points must be an (N, 3) array")
        if len(pts) < MIN_POINTS:
            raise CurveError("a curve needs at least %d points, got %d" % (MIN_POINTS, len(pts)))
        if not np.all(np.isfinite(pts)):
            raise CurveError("non-finite coordinates")
        if self.orientation not in (1, -1):
            raise CurveError("orientation must be +1 or -1")
        pts = project_to_sphere(pts, RHO)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if np.any(self.segment_lengths < DEGENERATE_SEGMENT):
            raise CurveError("consecutive points coincide")

    def __len__(self):
        return len(self.points)

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def segment_lengths(self):
        return self._cached("ell", lambda: segment_lengths(self.points))

    @property
    def length(self):
        return float(np.sum(self.segment_lengths))

    @property
    def left_area(self):
        return self._cached("left", lambda: float(left_area(self.points)))

    @property
    def area(self):
        """Area of the enclosed side, in (0, pi)."""
        a = self.left_area
        return a if self.orientation == 1 else SPHERE_AREA - a

    @property
    def curvature(self):
        return self._cached("kappa", lambda: curvature_vectors(self.points))

    @property
    def max_curvature(self):
        return float(np.max(np.linalg.norm(self.curvature, axis=1)))

    def reverse(self):
        """Same point set traversed backwards, orientation flag kept.

        The enclosed side therefore switches: area(reverse) = pi - area.
        """
        return SphereCurve(self.points[::-1].copy(), self.orientation)

    def canonical(self):
        """Flag the smaller side as enclosed, so that ``area <= pi/2``."""
        orient = 1 if self.left_area <= SPHERE_AREA / 2.0 else -1
        if orient == self.orientation:
            return self
        return SphereCurve(self.points, orient)

    def with_points(self, points):
        return SphereCurve(points, self.orientation)

    def centroid_point(self):
        """Normalised vertex centroid, projected to the sphere."""
        c = self.points.mean(axis=0)
        nrm = np.linalg.norm(c)
        if nrm < 1e-12:
            raise CurveError("centroid at the origin; no preferred point")
        return RHO * c / nrm


def curvature_vector(c, i):
    """Curvature vector of ``c`` at vertex ``i``."""
    n = len(c)
    if not -n <= i < n:
        raise IndexError(i)
    return c.curvature[i]


def enclosed_area(c):
    """Enclosed area of a simple curve, from turning angles."""
    if not is_simple(c.points):
        raise CurveError("curve not simple")
    return c.area


def _slerp(p, q, frac, radius=RHO):
    """Points a fraction of the way along the minor arcs p -> q."""
    u = p / radius
    v = q / radius
    omega = np.arccos(np.clip(np.sum(u * v, axis=-1), -1.0, 1.0))
    so = np.sin(omega)
    small = so < 1e-15
    so = np.where(small, 1.0, so)
    a = np.where(small, 1.0 - frac, np.sin((1.0 - frac) * omega) / so)
    b = np.where(small, frac, np.sin(frac * omega) / so)
    out = a[:, None] * u + b[:, None] * v
    return project_to_sphere(out, radius)


def resample_points(points, n_new, radius=RHO, max_iter=8):
    """Equal-arclength resampling along the piecewise-geodesic polygon.

    Vertex 0 is kept; the output has ``n_new`` points.
    """
    if n_new < MIN_POINTS:
        raise CurveError("resample needs at least %d points" % MIN_POINTS)
    ell = segment_lengths(points, radius)
    cum = np.concatenate([[0.0], np.cumsum(ell)])
    total = cum[-1]

    def place(s):
        seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(points) - 1)
        frac = np.clip((s - cum[seg]) / ell[seg], 0.0, 1.0)
        nxt = (seg + 1) % len(points)
        return _slerp(points[seg], points[nxt], frac, radius)

    s = total * np.arange(n_new) / n_new
    out = place(s)
    # chords across old corners are shorter than the arclength they span;
    # shift the stations until the new polygon itself is equally spaced,
    # which makes resampling idempotent
    for _ in range(max_iter):
        g = segment_lengths(out, radius)
        err = g.mean() - g
        if np.max(np.abs(err)) <= 1e-15 * total:
            break
        gaps = np.diff(np.concatenate([s, [total]])) + err
        s = np.concatenate([[0.0], np.cumsum(gaps[:-1])])
        out = place(s)
    return out


def resample(c, n_new=None):
    """Resample ``c`` to ``n_new`` points (default: same count) at equal arclength."""
    n_new = len(c) if n_new is None else int(n_new)
    return c.with_points(resample_points(c.points, n_new))


@dataclass(frozen=True)
class CurveFamilySpec:
    """Initial-curve generator.

    family: "latitude" (theta0), "great_circle" (axis), "perturbed_great_circle"
    (m, epsilon) or "point_list" (path).
    """

    family: str
    n: int = 512
    theta0: float = None
    axis: str = "z"
    m: int = 3
    epsilon: float = 0.05
    path: str = None


_AXES = {"x": 0, "y": 1, "z": 2}


def _circle_about(axis, theta, n):
    """Circle at polar angle theta about a coordinate axis, counterclockwise seen from +axis."""
    phi = 2.0 * np.pi * np.arange(n) / n
    k = _AXES[axis]
    i, j = (k + 1) % 3, (k + 2) % 3
    pts = np.zeros((n, 3))
    pts[:, i] = np.sin(theta) * np.cos(phi)
    pts[:, j] = np.sin(theta) * np.sin(phi)
    pts[:, k] = np.cos(theta)
    return RHO * pts


def make_family(spec):
    """Build the initial curve described by ``spec`` (canonically oriented)."""
    n = spec.n
    if spec.family != "point_list" and n < MIN_POINTS:
        raise CurveError("resolution must be at least %d" % MIN_POINTS)
    if spec.family == "latitude":
        th = spec.theta0
        if th is None or not 0.0 < th <= np.pi / 2:
            raise CurveError("latitude needs theta0 in (0, pi/2]")
        pts = _circle_about("z", th, n)
    elif spec.family == "great_circle":
        if spec.axis not in _AXES:
            raise CurveError("axis must be one of x, y, z")
        pts = _circle_about(spec.axis, np.pi / 2, n)
    elif spec.family == "perturbed_great_circle":
        if spec.m < 1:
            raise CurveError("mode must be positive")
        phi = 2.0 * np.pi * np.arange(n) / n
        # geodesic displacement eps*sin(m phi) along the meridian
        lat = spec.epsilon * np.sin(spec.m * phi) / RHO
        pts = RHO * np.stack([np.cos(lat) * np.cos(phi), np.cos(lat) * np.sin(phi), np.sin(lat)], axis=1)
    elif spec.family == "point_list":
        if spec.path is None:
            raise CurveError("point_list needs a path")
        pts = read_point_list(spec.path)
    else:
        raise CurveError("unknown curve family %r" % spec.family)
    curve = SphereCurve(pts)
    if not is_simple(curve):
        raise CurveError("curve not simple")
    return curve.canonical()


def read_point_list(path):
    """Read "x y z" rows; points are projected onto S^2(1/2)."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise CurveError("%s:%d: expected 3 numbers" % (path, lineno))
        rows.append([float(v) for v in parts])
    pts = np.array(rows, dtype=float).reshape(-1, 3)
    if np.any(np.linalg.norm(pts, axis=1) == 0):
        raise CurveError("point at the origin cannot be projected")
    return project_to_sphere(pts, RHO)


def write_point_list(path, points):
    with open(path, "w") as fh:
        for p in points:
            fh.write("%.17g %.17g %.17g\n" % tuple(p))
