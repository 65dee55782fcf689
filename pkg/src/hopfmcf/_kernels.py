"""Compiled inner loop of the curve shortening flow.

Mirrors ``curve.curvature_vectors`` plus the projected Euler update; the
numpy version stays the reference and the tests compare the two.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def euler_step(points, cfl, dt_cap, radius):
    """Return (new_points, dt, min_segment) for one projected Euler step.

    dt = min(cfl * h_min^2, dt_cap).  min_segment is the shortest geodesic
    segment before the step, reported so the caller can flag degeneracy.
    """
    n = points.shape[0]
    ell = np.empty(n)
    fwd = np.empty((n, 3))
    h_min = np.inf
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        dx = points[j, 0] - points[i, 0]
        dy = points[j, 1] - points[i, 1]
        dz = points[j, 2] - points[i, 2]
        c = math.sqrt(dx * dx + dy * dy + dz * dz)
        e = 2.0 * radius * math.asin(min(c / (2.0 * radius), 1.0))
        ell[i] = e
        if e < h_min:
            h_min = e
        if e > 0.0:
            fwd[i, 0] = dx / e
            fwd[i, 1] = dy / e
            fwd[i, 2] = dz / e
        else:
            fwd[i, 0] = np.nan
            fwd[i, 1] = np.nan
            fwd[i, 2] = np.nan
    dt = min(cfl * h_min * h_min, dt_cap)
    out = np.empty((n, 3))
    for i in range(n):
        b = i - 1 if i > 0 else n - 1
        w = 2.0 / (ell[i] + ell[b])
        kx = w * (fwd[i, 0] - fwd[b, 0])
        ky = w * (fwd[i, 1] - fwd[b, 1])
        kz = w * (fwd[i, 2] - fwd[b, 2])
        px = points[i, 0]
        py = points[i, 1]
        pz = points[i, 2]
        radial = (kx * px + ky * py + kz * pz) / (px * px + py * py + pz * pz)
        kx -= radial * px
        ky -= radial * py
        kz -= radial * pz
        qx = px + dt * kx
        qy = py + dt * ky
        qz = pz + dt * kz
        s = radius / math.sqrt(qx * qx + qy * qy + qz * qz)
        out[i, 0] = qx * s
        out[i, 1] = qy * s
        out[i, 2] = qz * s
    return out, dt, h_min


@njit(cache=True, nogil=True)
def polygon_length(points, radius):
    n = points.shape[0]
    total = 0.0
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        dx = points[j, 0] - points[i, 0]
        dy = points[j, 1] - points[i, 1]
        dz = points[j, 2] - points[i, 2]
        c = math.sqrt(dx * dx + dy * dy + dz * dz)
        total += 2.0 * radius * math.asin(min(c / (2.0 * radius), 1.0))
    return total
