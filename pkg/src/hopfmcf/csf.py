"""Curve shortening flow on S^2(1/2) in the reparametrized time tbar.

The velocity of each vertex is its discrete geodesic curvature vector.  Time
stepping is forward Euler followed by projection back to the sphere, with the
step tied to the shortest segment (dt = cfl * h_min^2) and periodic
equal-arclength resampling.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import euler_step, polygon_length
from .curve import (
    DEGENERATE_SEGMENT,
    MIN_POINTS,
    RHO,
    CurveError,
    SphereCurve,
    curvature_vectors,
    is_simple,
    left_area,
    resample_points,
)

__all__ = [
    "CsfError",
    "InstabilityError",
    "EmbeddednessError",
    "CsfParams",
    "CsfState",
    "initial_state",
    "step",
    "run_until",
    "predicted_area",
    "extinction_tbar",
]

HALF_SPHERE = math.pi / 2


class CsfError(RuntimeError):
    """Integration failure; ``tbar`` is the time reached."""

    def __init__(self, message, tbar):
        super().__init__("%s (tbar = %.6g)" % (message, tbar))
        self.tbar = tbar


class InstabilityError(CsfError):
    pass


class EmbeddednessError(CsfError):
    pass


@dataclass(frozen=True)
class CsfParams:
    cfl: float = 0.25
    resample_every: int = 10
    length_epsilon: float = 1e-3
    max_steps: int = 50_000_000
    # below coarsen_fraction * A0 the point count is halved whenever the
    # spacing falls under half its initial value, down to min_points
    coarsen_fraction: float = 0.02
    min_points: int = 64

    def __post_init__(self):
        if not 0.0 < self.cfl:
            raise ValueError("cfl must be positive")
        if self.resample_every < 1:
            raise ValueError("resample_every must be >= 1")
        if self.length_epsilon <= 0:
            raise ValueError("length_epsilon must be positive")
        if self.min_points < MIN_POINTS:
            raise ValueError("min_points must be >= %d" % MIN_POINTS)


@dataclass(frozen=True)
class CsfState:
    curve: SphereCurve
    tbar: float = 0.0
    step_count: int = 0
    a0: float = None
    h_ref: float = None
    extinct: bool = False
    extinction_point: np.ndarray = None

    @property
    def area(self):
        return self.curve.area


def initial_state(curve, tbar=0.0):
    return CsfState(curve=curve, tbar=tbar, a0=curve.area, h_ref=curve.length / len(curve))


def predicted_area(a0, tbar):
    """Enclosed area of the evolving curve: pi/2 - (pi/2 - A0) e^{4 tbar}."""
    if not 0.0 < a0 <= HALF_SPHERE:
        raise ValueError("a0 must lie in (0, pi/2]")
    return HALF_SPHERE - (HALF_SPHERE - a0) * math.exp(4.0 * tbar)


def extinction_tbar(a0):
    """Extinction time (1/4) ln(pi / (pi - 2 A0)); infinite for A0 = pi/2."""
    if not 0.0 < a0 <= HALF_SPHERE:
        raise ValueError("a0 must lie in (0, pi/2]")
    if a0 == HALF_SPHERE:
        return math.inf
    return -0.25 * math.log1p(-2.0 * a0 / math.pi)


class _Integrator:
    """Array-level loop shared by ``step`` and ``run_until``."""

    def __init__(self, state, params):
        self.params = params
        self.points = np.array(state.curve.points)
        self.orientation = state.curve.orientation
        self.tbar = state.tbar
        self.steps = state.step_count
        self.a0 = state.a0 if state.a0 is not None else state.curve.area
        self.h_ref = state.h_ref if state.h_ref is not None else state.curve.length / len(state.curve)
        self.extinct = state.extinct
        self.extinction_point = state.extinction_point

    def length(self):
        return polygon_length(self.points, RHO)

    def area(self):
        a = float(left_area(self.points))
        return a if self.orientation == 1 else math.pi - a

    def step(self, dt_cap=math.inf):
        p = self.params
        new, dt, h_min = euler_step(self.points, p.cfl, dt_cap, RHO)
        if not h_min >= DEGENERATE_SEGMENT:
            raise InstabilityError("degenerate segment", self.tbar)
        if not np.all(np.isfinite(new)):
            raise InstabilityError("non-finite update; reduce cfl", self.tbar)
        self.points = new
        self.tbar += dt
        self.steps += 1
        if self.steps % p.resample_every == 0:
            self._resample()
        if self.length() <= p.length_epsilon:
            self.extinct = True
            c = self.points.mean(axis=0)
            self.extinction_point = RHO * c / np.linalg.norm(c)

    def _resample(self):
        p = self.params
        n = len(self.points)
        try:
            if n > p.min_points and self.area() < p.coarsen_fraction * self.a0:
                spacing = self.length() / n
                if spacing < 0.5 * self.h_ref:
                    n = max(p.min_points, n // 2)
            self.points = resample_points(self.points, n)
        except (CurveError, FloatingPointError, ValueError) as exc:
            raise InstabilityError("resampling failed: %s" % exc, self.tbar) from exc
        if not np.all(np.isfinite(self.points)):
            raise InstabilityError("non-finite points after resampling", self.tbar)
        if not is_simple(self.points):
            raise EmbeddednessError("curve became non-simple", self.tbar)

    def state(self):
        try:
            curve = SphereCurve(self.points, self.orientation)
        except CurveError as exc:
            raise InstabilityError(str(exc), self.tbar) from exc
        return CsfState(
            curve=curve,
            tbar=self.tbar,
            step_count=self.steps,
            a0=self.a0,
            h_ref=self.h_ref,
            extinct=self.extinct,
            extinction_point=self.extinction_point,
        )


def step(state, params=CsfParams()):
    """One forward Euler step of the flow, projected back to the sphere.

    Raises
    ------
    InstabilityError
        On non-finite values or a collapsed segment.
    EmbeddednessError
        If the periodic simplicity check fails after resampling.
    """
    if state.extinct:
        raise CsfError("curve already extinct", state.tbar)
    it = _Integrator(state, params)
    it.step()
    return it.state()


def run_until(state, tbar_target, params=CsfParams(), observer=None, observe_every=None):
    """Integrate until ``tbar_target`` or extinction, whichever comes first.

    The last step is shortened to land exactly on the target.  ``observer`` is
    called with (tbar, length, area, max|kappa|) for the initial state, then
    after every accepted step, or only when tbar has advanced by at least
    ``observe_every`` since the previous call, and always for the final state.
    """
    if tbar_target < state.tbar:
        raise ValueError("target lies in the past")
    if state.extinct or tbar_target == state.tbar:
        return state
    it = _Integrator(state, params)

    def emit():
        k = curvature_vectors(it.points)
        observer(it.tbar, it.length(), it.area(), float(np.max(np.linalg.norm(k, axis=1))))

    last_obs = -math.inf
    if observer is not None:
        emit()
        last_obs = it.tbar
    n0 = it.steps
    while it.tbar < tbar_target and not it.extinct:
        if it.steps - n0 >= params.max_steps:
            raise CsfError("max_steps exceeded", it.tbar)
        it.step(dt_cap=tbar_target - it.tbar)
        if observer is not None:
            if observe_every is None or it.tbar - last_obs >= observe_every:
                emit()
                last_obs = it.tbar
    if observer is not None and last_obs != it.tbar:
        emit()
    return it.state()
