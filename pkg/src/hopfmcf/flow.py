"""Mean curvature flow of Hopf tori, assembled from the spherical curve flow.

A Hopf torus in S^3(R0) evolves as sqrt(R0^2 - 4t) times the preimage of a
curve moving by curve shortening flow on S^2(1/2), run in the clock
tbar = -(1/4) ln(1 - 4t/R0^2).  This module maps between the two clocks,
predicts the singular time and limit, drives the curve flow, builds torus
frames, and evaluates the two blow-up rescalings and the Type I quantity.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .csf import CsfParams, extinction_tbar, initial_state, predicted_area, run_until
from .curve import CurveError, CurveFamilySpec, SphereCurve, is_simple, make_family
from .hopf import HopfTorusMesh, build_torus, horizontal_lift
from .sphere import as_complex, fiber_point, horizontal_basis

log = logging.getLogger(__name__)

__all__ = [
    "POINT_CLIFFORD",
    "CIRCLE_CYLINDER",
    "AREA_TOL",
    "FlowError",
    "EvolutionConfig",
    "FlowRecord",
    "SingularityReport",
    "TypeIReport",
    "EvolutionResult",
    "tbar_of_t",
    "t_of_tbar",
    "radius_at",
    "predict",
    "evolve",
    "rescale_a",
    "rescale_b",
    "rescale_factor",
    "cylinder_fit",
    "clifford_distance",
    "g_function",
    "typeI_monitor",
]

POINT_CLIFFORD = "point_clifford"
CIRCLE_CYLINDER = "circle_cylinder"
HALF = math.pi / 2
# |A0 - pi/2| at or below this counts as the equal-volume case
AREA_TOL = 1e-6


class FlowError(ValueError):
    pass


def tbar_of_t(t, r0):
    """Curve-flow clock: tbar = -(1/4) ln((r0^2 - 4t) / r0^2)."""
    if r0 <= 0:
        raise FlowError("r0 must be positive")
    if not 0.0 <= t < r0 * r0 / 4.0:
        raise FlowError("t must lie in [0, r0^2/4)")
    return -0.25 * math.log1p(-4.0 * t / (r0 * r0))


def t_of_tbar(tbar, r0):
    """Inverse clock map t = (r0^2/4)(1 - e^{-4 tbar}); tends to r0^2/4 as tbar -> inf."""
    if tbar < 0:
        raise FlowError("tbar must be non-negative")
    if math.isinf(tbar):
        return r0 * r0 / 4.0
    return -0.25 * r0 * r0 * math.expm1(-4.0 * tbar)


def radius_at(t, r0):
    """Radius sqrt(r0^2 - 4t) of the hypersphere containing the torus at time t."""
    return math.sqrt(r0 * r0 - 4.0 * t)


@dataclass(frozen=True)
class SingularityReport:
    kind: str
    T: float
    limit_radius: float
    tau: float
    a0: float
    r0: float
    typeI_sup: float = math.nan
    limit_fit_residual: float = math.nan
    T_measured: float = math.nan
    tbar_end: float = math.nan
    extinct: bool = False
    extinction_point: Optional[tuple] = None

    def as_dict(self):
        return dict(self.__dict__)


def predict(a0, r0, area_tol=AREA_TOL):
    """Singular time and limit predicted from the enclosed area A0 and R0.

    A0 = pi/2 (within ``area_tol``): T = r0^2/4, the torus shrinks to a point
    and its 1/R(t) rescaling tends to the Clifford torus.  A0 < pi/2:
    T = A0 r0^2 / (2 pi) and the torus collapses onto a circle of radius
    r0 sqrt(1 - 2 A0/pi).
    """
    if r0 <= 0:
        raise FlowError("r0 must be positive")
    if not 0.0 < a0 <= HALF + area_tol:
        raise FlowError("a0 must lie in (0, pi/2]")
    if abs(a0 - HALF) <= area_tol:
        return SingularityReport(kind=POINT_CLIFFORD, T=r0 * r0 / 4.0, limit_radius=0.0, tau=math.inf, a0=a0, r0=r0)
    T = a0 * r0 * r0 / (2.0 * math.pi)
    return SingularityReport(
        kind=CIRCLE_CYLINDER,
        T=T,
        limit_radius=r0 * math.sqrt(1.0 - 2.0 * a0 / math.pi),
        tau=extinction_tbar(a0),
        a0=a0,
        r0=r0,
    )


@dataclass(frozen=True)
class FlowRecord:
    t: float
    tbar: float
    R: float
    length: float
    area: float
    area_predicted: float
    max_kappa: float
    sup_sigma_sq: float
    typeI: float

    FIELDS = ("t", "tbar", "R", "length", "area", "area_predicted", "max_kappa", "sup_sigma_sq", "typeI")

    def as_row(self):
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class EvolutionConfig:
    r0: float
    initial_curve: Union[CurveFamilySpec, SphereCurve]
    csf_params: CsfParams = field(default_factory=CsfParams)
    frame_times: Sequence[float] = ()
    n_beta: int = 64
    # horizon in tbar for the equal-area case, where the flow never goes extinct
    tbar_max: float = 1.5
    observe_every: Optional[float] = None

    def __post_init__(self):
        if not self.r0 > 0:
            raise FlowError("r0 must be positive")
        if any(t < 0 for t in self.frame_times):
            raise FlowError("frame times must be non-negative")
        if self.n_beta < 8:
            raise FlowError("n_beta must be at least 8")


class EvolutionResult(NamedTuple):
    records: List[FlowRecord]
    frames: List[HopfTorusMesh]
    report: SingularityReport
    final_curve: SphereCurve = None


def _initial_curve(spec):
    if isinstance(spec, SphereCurve):
        if not is_simple(spec):
            raise CurveError("curve not simple")
        return spec.canonical()
    return make_family(spec)


def _record(t_bar, length, area, kmax, a0, r0, T):
    t = t_of_tbar(t_bar, r0)
    denom = r0 * r0 - 4.0 * t
    sig = (4.0 + kmax * kmax) / denom
    return FlowRecord(
        t=t,
        tbar=t_bar,
        R=math.sqrt(denom),
        length=length,
        area=area,
        area_predicted=predicted_area(min(a0, HALF), t_bar),
        max_kappa=kmax,
        sup_sigma_sq=sig,
        typeI=(T - t) * sig,
    )


def _frame(state, r0, n_beta, t=None):
    if t is None:
        t = t_of_tbar(state.tbar, r0)
    lift = horizontal_lift(state.curve)
    return build_torus(lift, n_beta, radius_at(t, r0), t_stamp=t)


def evolve(config):
    """Run the torus flow for ``config``.

    Returns records (one per observation), torus frames at the requested
    times plus one final frame, and the singularity report.  In the unequal
    area case the curve flow runs until the curve length drops below
    ``csf_params.length_epsilon``; otherwise it stops at ``tbar_max``.
    """
    r0 = config.r0
    params = config.csf_params
    curve = _initial_curve(config.initial_curve)
    a0 = curve.area
    pred = predict(a0, r0)
    T = pred.T
    tau = pred.tau
    times = sorted(config.frame_times)
    for t in times:
        if t >= T:
            raise FlowError("frame time %g is not before the predicted singular time %g" % (t, T))

    if pred.kind == POINT_CLIFFORD:
        tbar_end = max([config.tbar_max] + [tbar_of_t(t, r0) for t in times])
        stride = config.observe_every or tbar_end / 300.0
    else:
        tbar_end = math.inf
        stride = config.observe_every or tau / 500.0

    records = []

    def observe(t_bar, length, area, kmax):
        # consecutive run_until calls report their shared endpoint twice
        if records and records[-1].tbar == t_bar:
            return
        records.append(_record(t_bar, length, area, kmax, a0, r0, T))

    state = initial_state(curve)
    frames = []
    for t in times:
        tb = tbar_of_t(t, r0)
        state = run_until(state, tb, params, observe, stride)
        if state.extinct:
            log.warning("curve went extinct at tbar=%.6g before frame t=%g", state.tbar, t)
            break
        frames.append(_frame(state, r0, config.n_beta, t))
    if not state.extinct:
        state = run_until(state, tbar_end, params, observe, stride)
    frames.append(_frame(state, r0, config.n_beta))

    ext_point = None
    T_meas = math.nan
    if state.extinct:
        T_meas = t_of_tbar(state.tbar, r0)
        ext_point = tuple(float(v) for v in state.extinction_point)
    mon = typeI_monitor(records, T, tau)

    residual = math.nan
    if pred.kind == POINT_CLIFFORD:
        residual = clifford_distance(rescale_a(frames[-1]).grid)
    elif ext_point is not None and len(frames) > 1:
        q = fiber_point(np.array(ext_point), 1.0)
        last = frames[-2]
        cloud = rescale_b(last, a0, r0, q)
        residual = cylinder_fit(cloud, q, pred.limit_radius, a0)

    report = SingularityReport(
        kind=pred.kind,
        T=T,
        limit_radius=pred.limit_radius,
        tau=tau,
        a0=a0,
        r0=r0,
        typeI_sup=mon.sup_typeI,
        limit_fit_residual=residual,
        T_measured=T_meas,
        tbar_end=state.tbar,
        extinct=state.extinct,
        extinction_point=ext_point,
    )
    return EvolutionResult(records, frames, report, state.curve)


def rescale_a(mesh):
    """Blow-up for the equal-area case: divide by R(t), landing on S^3(1)."""
    return HopfTorusMesh(mesh.grid / mesh.R, 1.0, mesh.seam_phase, mesh.t_stamp, mesh.lift)


def rescale_factor(t, a0, r0):
    """lambda(t) = sqrt(A0 / (pi/2 - (pi/2 - A0) r0^2 / (r0^2 - 4t)))."""
    if not 0.0 < a0 < HALF:
        raise FlowError("rescale_b needs a0 in (0, pi/2)")
    denom = HALF - (HALF - a0) * r0 * r0 / (r0 * r0 - 4.0 * t)
    if not denom > 0:
        raise FlowError("lambda is undefined at t >= T")
    return math.sqrt(a0 / denom)


def rescale_b(mesh, a0, r0, q):
    """Blow-up about the limit circle: R(t) q + lambda(t) (F - R(t) q).

    Returns the rescaled vertices as an (n_beta, N, 4) array.
    """
    q = np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > 1e-8:
        raise FlowError("q must be a unit vector")
    t = mesh.t_stamp
    lam = rescale_factor(t, a0, r0)
    center = radius_at(t, r0) * q
    return center + lam * (mesh.grid - center)


def cylinder_fit(cloud, q, R_T, a0):
    """Relative deviation of ``cloud`` from the limit cylinder.

    The cylinder has axis R_T q + s Jq and radius R_T sqrt(A0/pi); distances
    to the axis are taken inside the 3-space R_T q + span{Jq, e1*, e2*},
    with e1*, e2* spanning the horizontal space at q.
    """
    pts = np.asarray(cloud, dtype=float).reshape(-1, 4)
    if len(pts) == 0:
        raise FlowError("empty point cloud")
    if R_T <= 0:
        raise FlowError("R_T must be positive")
    q = np.asarray(q, dtype=float)
    e1, e2 = horizontal_basis(q)
    rel = pts - R_T * q
    dist = np.hypot(rel @ e1, rel @ e2)
    radius = R_T * math.sqrt(a0 / math.pi)
    return float(np.max(np.abs(dist - radius)) / radius)


def clifford_distance(grid):
    """Largest geodesic distance on S^3 from the vertices to {|z| = |w|}.

    A point with (|z|, |w|) = (cos a, sin a) sits at distance |a - pi/4|;
    equivalently ||z|^2 - 1/2| + ||w|^2 - 1/2| = sin(2|a - pi/4|).
    """
    z, w = as_complex(np.asarray(grid, dtype=float).reshape(-1, 4))
    a = np.arctan2(np.abs(w), np.abs(z))
    return float(np.max(np.abs(a - math.pi / 4)))


def g_function(tbar, tau):
    """G(tbar) = (1 - e^{4(tbar - tau)})/4 - (tau - tbar); increasing, negative before tau."""
    tbar = np.asarray(tbar, dtype=float)
    return -np.expm1(4.0 * (tbar - tau)) / 4.0 - (tau - tbar)


@dataclass(frozen=True)
class TypeIReport:
    sup_typeI: float
    c_est: float
    bound_holds: bool
    g_increasing: Optional[bool]
    g_negative: Optional[bool]


def typeI_monitor(records, T, tau=None):
    """Check (T - t) sup|sigma|^2 against 1 + C_est.

    C_est is the sup over the records of (tau - tbar) max|kappa|^2.  With no
    finite extinction time the bound is 1 + sup|kappa|^2 / 4 instead, which
    is what (T - t)|sigma|^2 equals when T = R0^2/4.  G is evaluated at the
    record times before tau.
    """
    if not records:
        raise FlowError("no records")
    typeI = np.array([r.typeI for r in records])
    kappa2 = np.array([r.max_kappa for r in records]) ** 2
    tb = np.array([r.tbar for r in records])
    if tau is None or math.isinf(tau):
        c_est = float(np.max(kappa2) / 4.0)
        g_inc = g_neg = None
    else:
        c_est = float(max(0.0, np.max((tau - tb) * kappa2)))
        before = tb[tb < tau]
        g = g_function(before, tau)
        g_inc = bool(np.all(np.diff(g) > 0))
        g_neg = bool(np.all(g < 0))
    # relative slack for rounding in the equal-area identity
    bound = bool(np.all(typeI <= (1.0 + c_est) * (1.0 + 1e-12)))
    return TypeIReport(float(np.max(typeI)), c_est, bound, g_inc, g_neg)
