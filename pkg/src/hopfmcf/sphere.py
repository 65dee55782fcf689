"""Primitives on the round spheres S^2(rho) in R^3 and S^3(R) in C^2 = R^4.

Points are plain numpy arrays whose last axis holds the coordinates, so every
function here works on a single point or on a whole stack of them.  A point of
R^4 is read as the complex pair (z, w) = (a + ib, c + id).
"""

import numpy as np

__all__ = [
    "SphereError",
    "as_complex",
    "from_complex",
    "hopf_project",
    "hopf_jacobian",
    "j_mul",
    "phase_rotate",
    "hermitian",
    "exp_sphere",
    "tangent_project",
    "project_to_sphere",
    "cross",
    "geodesic_distance",
    "fiber_point",
    "horizontal_basis",
]

# drift beyond this (relative) means a caller bug, not integrator noise
HOPF_REJECT_RTOL = 1e-6
TANGENT_RTOL = 1e-9


class SphereError(ValueError):
    pass


def as_complex(p):
    """Split R^4 points into the complex coordinates (z, w)."""
    p = np.asarray(p, dtype=float)
    return p[..., 0] + 1j * p[..., 1], p[..., 2] + 1j * p[..., 3]


def from_complex(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.stack([z.real, z.imag, w.real, w.imag], axis=-1)


def j_mul(p):
    """Complex structure: multiply both complex coordinates by i."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    out[..., 0] = -p[..., 1]
    out[..., 1] = p[..., 0]
    out[..., 2] = -p[..., 3]
    out[..., 3] = p[..., 2]
    return out


def phase_rotate(p, beta):
    """Apply the fiber action p -> e^{i beta} p."""
    p = np.asarray(p, dtype=float)
    beta = np.asarray(beta, dtype=float)[..., None]
    return np.cos(beta) * p + np.sin(beta) * j_mul(p)


def hermitian(u, v):
    """Hermitian product (u, v) = u1 conj(v1) + u2 conj(v2) of R^4 vectors."""
    uz, uw = as_complex(u)
    vz, vw = as_complex(v)
    return uz * np.conj(vz) + uw * np.conj(vw)


def hopf_project(p, R=1.0):
    """Hopf fibration pi_R : S^3(R) -> S^2(R/2).

    pi_R(z, w) = (2 z conj(w), |z|^2 - |w|^2) / (2R), returned in R^3 as
    (Re 2z conj(w), Im 2z conj(w), |z|^2 - |w|^2) / (2R).

    Raises
    ------
    SphereError
        If some point is further than 1e-6 R (relative) from S^3(R).
    """
    p = np.asarray(p, dtype=float)
    if R <= 0:
        raise SphereError("radius must be positive")
    norms = np.linalg.norm(p, axis=-1)
    if np.any(np.abs(norms - R) > HOPF_REJECT_RTOL * R):
        raise SphereError("point is not on S^3(R): |p| = %r, R = %r" % (np.max(norms), R))
    a, b, c, d = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    x = (a * c + b * d) / R
    y = (b * c - a * d) / R
    z = (a * a + b * b - c * c - d * d) / (2.0 * R)
    return np.stack([x, y, z], axis=-1)


def hopf_jacobian(p, R=1.0):
    """Differential of ``hopf_project`` at p, as a (..., 3, 4) array."""
    p = np.asarray(p, dtype=float)
    a, b, c, d = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    rows = [
        np.stack([c, d, a, b], axis=-1),
        np.stack([-d, c, b, -a], axis=-1),
        np.stack([a, b, -c, -d], axis=-1),
    ]
    return np.stack(rows, axis=-2) / R


def tangent_project(p, v):
    """Orthogonal projection of v onto the tangent space of the sphere through p."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    pp = np.sum(p * p, axis=-1, keepdims=True)
    return v - np.sum(v * p, axis=-1, keepdims=True) / pp * p


def project_to_sphere(p, radius):
    p = np.asarray(p, dtype=float)
    return radius * p / np.linalg.norm(p, axis=-1, keepdims=True)


def cross(u, v):
    """Right-handed cross product in R^3."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.stack(
        [
            u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1],
            u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2],
            u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0],
        ],
        axis=-1,
    )


def geodesic_distance(p, q, radius):
    """Great-circle distance between points of a sphere of the given radius."""
    # chord formula: accurate for nearby points, valid in any dimension
    chord = np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(q, dtype=float), axis=-1)
    return 2.0 * radius * np.arcsin(np.clip(chord / (2.0 * radius), 0.0, 1.0))


def exp_sphere(base, v, radius):
    """Exponential map of the sphere of the given radius at ``base``.

    Returns cos(|v|/rho) base + rho sin(|v|/rho) v/|v|, and ``base`` when v = 0.
    """
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    vn = np.linalg.norm(v, axis=-1, keepdims=True)
    radial = np.sum(v * base, axis=-1, keepdims=True) / radius
    if np.any(np.abs(radial) > TANGENT_RTOL * radius * np.maximum(vn, 1.0)):
        raise SphereError("vector is not tangent to the sphere at base")
    ang = vn / radius
    safe = np.where(vn > 0, vn, 1.0)
    out = np.cos(ang) * base + radius * np.sin(ang) * v / safe
    return np.where(vn > 0, out, base)


def fiber_point(x, R=1.0):
    """Point of S^3(R) over x in S^2(R/2) in the default gauge.

    The gauge picks the point of the fiber whose first coordinate is real and
    maximal, i.e. z real and non-negative.  Over the point where z vanishes the
    second coordinate is taken real and positive instead.
    """
    x = np.asarray(x, dtype=float)
    u = x / np.linalg.norm(x, axis=-1, keepdims=True)
    # unit-sphere picture: |z|^2 = (1 + u3)/2, z conj(w) = (u1 + i u2)/2
    zz = np.sqrt(np.clip((1.0 + u[..., 2]) / 2.0, 0.0, 1.0))
    ww = np.sqrt(np.clip((1.0 - u[..., 2]) / 2.0, 0.0, 1.0))
    degenerate = zz < 1e-300
    safe = np.where(degenerate, 1.0, zz)
    w = np.where(degenerate, ww + 0j, (u[..., 0] - 1j * u[..., 1]) / (2.0 * safe))
    return R * from_complex(zz + 0j, w)


def horizontal_basis(p):
    """Orthonormal basis (e1, J e1) of the horizontal space at p in S^3(R).

    The horizontal space is the complex line orthogonal to p; for p = (z, w)
    it is spanned by (-conj(w), conj(z)).
    """
    z, w = as_complex(p)
    R = np.sqrt(np.abs(z) ** 2 + np.abs(w) ** 2)
    e1 = from_complex(-np.conj(w) / R, np.conj(z) / R)
    return e1, j_mul(e1)
