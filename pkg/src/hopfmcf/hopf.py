"""Horizontal lifts through the Hopf fibration and the Hopf tori they sweep.

The lift of a geodesic polygon is built vertex by vertex: each new vertex is
the point of the next fiber closest to the previous one.  That point is the
endpoint of the horizontal great-circle arc over the base segment, so the
discrete lift is exactly horizontal and its closing phase is the holonomy of
the polygon, twice the area to its left.
"""

from dataclasses import dataclass

import numpy as np

from .curve import SphereCurve
from .sphere import (
    as_complex,
    fiber_point,
    from_complex,
    hermitian,
    hopf_jacobian,
    hopf_project,
    horizontal_basis,
    j_mul,
    phase_rotate,
)

__all__ = [
    "HopfError",
    "HorizontalLift",
    "HopfTorusMesh",
    "horizontal_lift",
    "build_torus",
    "check_lagrangian",
    "lagrangian_residuals",
    "mean_curvature",
    "lift_vector",
    "horizontality_residuals",
    "twist_mesh",
    "phase_shear",
]

TWO_PI = 2.0 * np.pi
SEED_TOL = 1e-8


class HopfError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HorizontalLift:
    points: np.ndarray  # (N, 4) on S^3(1)
    holonomy_phase: float  # end of the lift = e^{i phase} * start, in [0, 2pi)
    base_curve: SphereCurve

    def __len__(self):
        return len(self.points)

    def closing_point(self):
        return phase_rotate(self.points[0], self.holonomy_phase)


@dataclass(frozen=True, eq=False)
class HopfTorusMesh:
    """Grid F[j, k] = R e^{i beta_j} lift[k] on S^3(R).

    Axis 0 runs along the fibers (beta_j = 2 pi j / n_beta), axis 1 along the
    lift.  Row k = N would coincide with row 0 rotated by ``seam_phase``.
    """

    grid: np.ndarray  # (n_beta, N, 4)
    R: float
    seam_phase: float
    t_stamp: float = 0.0
    lift: HorizontalLift = None

    @property
    def n_beta(self):
        return self.grid.shape[0]

    @property
    def n_v(self):
        return self.grid.shape[1]

    def vertices(self):
        return self.grid.reshape(-1, 4)

    def stitched_grid(self):
        """Same surface with the holonomy spread along v, so that row N equals row 0.

        Row k is rotated by -seam_phase * k / N along its fibers; the surface
        (a union of fibers) is unchanged and the grid closes up periodically.
        """
        k = np.arange(self.n_v)
        shift = -self.seam_phase * k / self.n_v
        return phase_rotate(self.grid, np.broadcast_to(shift, self.grid.shape[:2]))

    def quads(self):
        """Quad faces (vertex indices into ``stitched_grid().reshape(-1, 4)``), periodic in both directions."""
        nb, nv = self.n_beta, self.n_v
        j, k = np.meshgrid(np.arange(nb), np.arange(nv), indexing="ij")
        idx = lambda jj, kk: (jj % nb) * nv + (kk % nv)  # noqa: E731
        return np.stack([idx(j, k), idx(j + 1, k), idx(j + 1, k + 1), idx(j, k + 1)], axis=-1).reshape(-1, 4)


def horizontal_lift(curve, seed=None):
    """Horizontal lift of a closed curve on S^2(1/2) to S^3.

    Parameters
    ----------
    curve : SphereCurve
    seed : array_like, optional
        Starting point on the fiber over ``curve.points[0]``.  Defaults to the
        gauge of :func:`sphere.fiber_point` (first coordinate real, maximal).

    Raises
    ------
    HopfError
        If the seed is not on S^3 or does not project to the first vertex.
    """
    x = curve.points
    zeta = fiber_point(x, 1.0)
    if seed is None:
        start = zeta[0]
    else:
        start = np.asarray(seed, dtype=float)
        if abs(np.linalg.norm(start) - 1.0) > SEED_TOL:
            raise HopfError("seed is not on S^3")
        if np.linalg.norm(hopf_project(start, 1.0) - x[0]) > SEED_TOL:
            raise HopfError("seed is not on the fiber over the first point")
    # phase of the seed relative to the gauge lift of vertex 0
    phi0 = np.angle(hermitian(start, zeta[0]))
    # (zeta_k, zeta_{k-1}); the closest-point choice cancels its phase
    h = hermitian(zeta, np.roll(zeta, 1, axis=0))
    steps = -np.angle(h)
    phases = phi0 + np.concatenate([[0.0], np.cumsum(steps[1:])])
    pts = phase_rotate(zeta, phases)
    pts[0] = start
    holonomy = np.mod(-np.sum(np.angle(h)), TWO_PI)
    return HorizontalLift(points=pts, holonomy_phase=float(holonomy), base_curve=curve)


def horizontality_residuals(points):
    """|<p_{k+1} - p_k, J (p_k + p_{k+1})/2>| / |p_{k+1} - p_k| for each open segment of the lift."""
    d = points[1:] - points[:-1]
    mid = 0.5 * (points[1:] + points[:-1])
    return np.abs(np.sum(d * j_mul(mid), axis=1)) / np.linalg.norm(d, axis=1)


def build_torus(lift, n_beta, R=1.0, t_stamp=0.0):
    """Sample the Hopf torus R e^{i beta} lift(v) on an n_beta x N grid."""
    if n_beta < 8:
        raise HopfError("n_beta must be at least 8")
    if R <= 0:
        raise HopfError("radius must be positive")
    beta = TWO_PI * np.arange(n_beta) / n_beta
    grid = R * phase_rotate(lift.points[None, :, :], beta[:, None])
    return HopfTorusMesh(grid=grid, R=float(R), seam_phase=lift.holonomy_phase, t_stamp=t_stamp, lift=lift)


def lagrangian_residuals(grid):
    """|omega(D_beta F, D_v F)| / (|D_beta F| |D_v F|) at interior stencils (central differences)."""
    d_beta = np.roll(grid, -1, axis=0) - np.roll(grid, 1, axis=0)
    d_beta = d_beta[:, 1:-1]
    d_v = grid[:, 2:] - grid[:, :-2]
    num = np.abs(np.sum(j_mul(d_beta) * d_v, axis=-1))
    return num / (np.linalg.norm(d_beta, axis=-1) * np.linalg.norm(d_v, axis=-1))


def check_lagrangian(mesh):
    """Largest normalised Kaehler-form residual over the mesh."""
    grid = mesh.grid if isinstance(mesh, HopfTorusMesh) else np.asarray(mesh, dtype=float)
    return float(np.max(lagrangian_residuals(grid)))


def lift_vector(w, p, R=1.0, x=None):
    """Horizontal lift at p in S^3(R) of a tangent vector w of S^2(R/2).

    The result is orthogonal to p and Jp, maps to w under the differential of
    the Hopf map and has the same length as w.
    """
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    base = hopf_project(p, R)
    if x is not None and np.max(np.linalg.norm(base - np.asarray(x, dtype=float), axis=-1)) > 1e-8 * R:
        raise HopfError("p is not on the fiber over x")
    radial = np.sum(w * base, axis=-1)
    if np.any(np.abs(radial) > 1e-9 * (R / 2.0) * np.maximum(np.linalg.norm(w, axis=-1), 1.0)):
        raise HopfError("w is not tangent to S^2(R/2) at pi(p)")
    e1, e2 = horizontal_basis(p)
    jac = hopf_jacobian(p, R)
    img1 = np.einsum("...ij,...j->...i", jac, e1)
    img2 = np.einsum("...ij,...j->...i", jac, e2)
    a = np.sum(w * img1, axis=-1)[..., None]
    b = np.sum(w * img2, axis=-1)[..., None]
    return a * e1 + b * e2


def mean_curvature(mesh, kappa_vectors):
    """Mean curvature vector H = (1/R) kappa* - (2/R) F at every mesh vertex.

    ``kappa_vectors`` holds the curvature vectors of the base curve on
    S^2(1/2), one per lift point (the curve of the unit-radius picture), and F
    is the vertex position rescaled to S^3(1).  On a Hopf torus of S^3(R) this
    gives |H|^2 = (|kappa|^2 + 4) / R^2.
    """
    kappa_vectors = np.asarray(kappa_vectors, dtype=float)
    if kappa_vectors.shape != (mesh.n_v, 3):
        raise HopfError("need one curvature vector per lift point: %s vs %d" % (kappa_vectors.shape, mesh.n_v))
    unit = mesh.grid / mesh.R
    kb = np.broadcast_to(kappa_vectors, unit.shape[:2] + (3,))
    lifted = lift_vector(kb, unit, 1.0)
    return (lifted - 2.0 * unit) / mesh.R


def phase_shear(mesh, rate=0.3):
    """Multiply row v of the grid by e^{i rate v}, v in [0, 2 pi).

    This only reparametrizes the same union of fibers, so the result is still
    Lagrangian; see :func:`twist_mesh` for a genuine non-Lagrangian control.
    """
    v = TWO_PI * np.arange(mesh.n_v) / mesh.n_v
    grid = phase_rotate(mesh.grid, np.broadcast_to(rate * v, mesh.grid.shape[:2]))
    return HopfTorusMesh(grid=grid, R=mesh.R, seam_phase=mesh.seam_phase, t_stamp=mesh.t_stamp, lift=mesh.lift)


def twist_mesh(mesh, rate=0.3):
    """Rotate the second complex coordinate by rate * sin(beta).

    The beta-lines stop being Hopf fibers, and omega(F_beta, F_v) becomes
    rate cos(beta) d(|z|^2)/dv / 2, non-zero wherever |z| varies along the curve.
    """
    beta = TWO_PI * np.arange(mesh.n_beta) / mesh.n_beta
    z, w = as_complex(mesh.grid)
    w = w * np.exp(1j * rate * np.sin(beta))[:, None]
    return HopfTorusMesh(grid=from_complex(z, w), R=mesh.R, seam_phase=mesh.seam_phase, t_stamp=mesh.t_stamp, lift=mesh.lift)


def project_rows(mesh):
    """Hopf projection of every grid row, rescaled to S^2(1/2)."""
    return hopf_project(mesh.grid, mesh.R) / mesh.R
