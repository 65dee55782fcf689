import math

import numpy as np
import pytest

from hopfmcf.curve import RHO
from hopfmcf.sphere import cross


def circle_about(center, alpha, n, start=None, sign=1):
    """Circle of angular radius alpha about the unit vector ``center`` on S^2(1/2)."""
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    if start is None:
        helper = np.array([1.0, 0, 0]) if abs(c[0]) < 0.9 else np.array([0, 1.0, 0])
        e1 = np.cross(c, helper)
        e1 /= np.linalg.norm(e1)
    else:
        s0 = np.asarray(start, dtype=float) / np.linalg.norm(start)
        e1 = (s0 - math.cos(alpha) * c) / math.sin(alpha)
    e2 = sign * cross(c, e1)
    s = 2 * math.pi * np.arange(n) / n
    return RHO * (math.cos(alpha) * c + math.sin(alpha) * (np.cos(s)[:, None] * e1 + np.sin(s)[:, None] * e2))


def tangent_figure_eight(n=128, alpha=0.5):
    """Two circles touching at the north pole, traversed as one closed curve."""
    north = np.array([0, 0, 1.0])
    a = circle_about([math.sin(alpha), 0, math.cos(alpha)], alpha, n, start=north)
    b = circle_about([-math.sin(alpha), 0, math.cos(alpha)], alpha, n, start=north, sign=-1)
    return np.vstack([a, b])


def star_curve(rng, n=400):
    return star_curve_with_center(rng, n)[0]


def star_curve_with_center(rng, n=400):
    """Random star-shaped simple curve around a random center, in geodesic polar coordinates."""
    center = rng.normal(size=3)
    center /= np.linalg.norm(center)
    base = rng.uniform(0.4, 1.8)  # angular radius, radians
    k = np.arange(1, 5)
    amp = rng.uniform(-0.12, 0.12, size=4) / k
    ph = rng.uniform(0, 2 * math.pi, size=4)
    s = 2 * math.pi * np.arange(n) / n
    r = base * (1 + np.sum(amp[:, None] * np.sin(k[:, None] * s + ph[:, None]), axis=0))
    helper = np.array([1.0, 0, 0]) if abs(center[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(center, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(center, e1)
    dirs = np.cos(s)[:, None] * e1 + np.sin(s)[:, None] * e2
    return RHO * (np.cos(r)[:, None] * center + np.sin(r)[:, None] * dirs), center


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
