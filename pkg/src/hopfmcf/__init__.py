"""Mean curvature flow of Lagrangian Hopf tori, computed through curve
shortening flow on the 2-sphere of radius 1/2."""

from .csf import CsfParams, CsfState, run_until, step
from .curve import CurveFamilySpec, SphereCurve, enclosed_area, is_simple, make_family, resample
from .flow import EvolutionConfig, FlowRecord, SingularityReport, evolve, predict, t_of_tbar, tbar_of_t
from .hopf import HopfTorusMesh, build_torus, check_lagrangian, horizontal_lift, mean_curvature

__version__ = "0.1.0"
