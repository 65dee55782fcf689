"""JSON run configuration for ``hopfmcf run``."""

import json
import math
from importlib import resources
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .csf import CsfParams
from .curve import MIN_POINTS, CurveFamilySpec
from .flow import EvolutionConfig, predict

__all__ = ["CurveConfig", "ExportConfig", "RunConfig", "load_config", "bundled_config", "frame_schedule", "schema"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CurveConfig(_Strict):
    """Initial curve on S^2(1/2)."""

    family: Literal["latitude", "great_circle", "perturbed_great_circle", "point_list"]
    theta0: Optional[float] = Field(None, gt=0, le=math.pi / 2, description="polar angle of a latitude, radians")
    axis: Literal["x", "y", "z"] = "z"
    m: int = Field(3, ge=1)
    epsilon: float = 0.05
    path: Optional[str] = Field(None, description="point list file, relative to the config file")

    @model_validator(mode="after")
    def _needs(self):
        if self.family == "latitude" and self.theta0 is None:
            raise ValueError("latitude needs theta0")
        if self.family == "point_list" and self.path is None:
            raise ValueError("point_list needs path")
        return self


class ExportConfig(_Strict):
    csv: bool = True
    mesh4d: bool = True
    obj3d: bool = False


class RunConfig(_Strict):
    """One flow experiment.

    Frames come from ``frame_times`` (values of t) when given, otherwise
    ``frame_count`` frames at t = T (1 - 2^-j), j = 0, 1, ..., so that the
    remaining time halves between frames.  A final frame is always added.
    """

    name: str = "run"
    r0: float = Field(..., gt=0)
    curve: CurveConfig
    n: int = Field(512, ge=MIN_POINTS, description="points on the base curve")
    n_beta: int = Field(64, ge=8, description="points along each fiber")
    cfl: float = Field(0.25, gt=0)
    resample_every: int = Field(10, ge=1)
    length_epsilon: float = Field(1e-3, gt=0)
    tbar_max: float = Field(1.5, gt=0, description="horizon when the flow does not go extinct")
    frame_count: int = Field(6, ge=0)
    frame_times: Optional[List[float]] = None
    output_dir: str = "out"
    export: ExportConfig = ExportConfig()

    def family_spec(self, base_dir=None):
        c = self.curve
        path = c.path
        if path is not None and base_dir is not None:
            path = str(Path(base_dir) / path)
        return CurveFamilySpec(family=c.family, n=self.n, theta0=c.theta0, axis=c.axis, m=c.m, epsilon=c.epsilon, path=path)

    def csf_params(self):
        return CsfParams(cfl=self.cfl, resample_every=self.resample_every, length_epsilon=self.length_epsilon)

    def to_evolution(self, curve):
        """EvolutionConfig for an already built initial curve."""
        times = self.frame_times
        if times is None:
            times = frame_schedule(predict(curve.area, self.r0).T, self.frame_count)
        return EvolutionConfig(
            r0=self.r0,
            initial_curve=curve,
            csf_params=self.csf_params(),
            frame_times=list(times),
            n_beta=self.n_beta,
            tbar_max=self.tbar_max,
        )


def frame_schedule(T, count):
    return [T * -math.expm1(-j * math.log(2.0)) for j in range(count)]


def load_config(path):
    with open(path) as fh:
        return RunConfig.model_validate(json.load(fh))


def bundled_config(name):
    """Path of a config shipped with the package (``clifford``, ``cap60``)."""
    ref = resources.files("hopfmcf") / "configs" / ("%s.json" % name)
    if not ref.is_file():
        raise FileNotFoundError(name)
    return Path(str(ref))


def schema():
    return RunConfig.model_json_schema()
