"""Pydantic request/response models for the quantchar service."""

from __future__ import annotations

import math
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

from .. import measures as ms
from ..geometry import NormSpec


def parse_r(r) -> NormSpec:
    """Norm order from the wire: a float or the string 'inf'."""
    if isinstance(r, str):
        if r.lower() in ("inf", "infinity"):
            return NormSpec(math.inf)
        return NormSpec(float(r))
    return NormSpec(float(r))


def r_to_wire(r: float):
    return "inf" if r == math.inf else r


class MeasureSpec(BaseModel):
    """JSON measure specification shared by the CLI and the service."""

    kind: Literal["dirac", "uniform", "normal", "lognormal", "discrete"]
    params: dict = Field(default_factory=dict)
    atoms: Optional[list] = None
    weights: Optional[list[float]] = None

    def to_measure(self) -> ms.Measure:
        return ms.measure_from_json(self.model_dump())


class GridPoints(BaseModel):
    points: list[list[float]]

    @field_validator("points", mode="before")
    @classmethod
    def _coerce(cls, v):
        if v and not isinstance(v[0], (list, tuple)):
            return [[float(x)] for x in v]
        return v


class QErrRequest(BaseModel):
    measure: MeasureSpec
    grid: Union[list[float], list[list[float]]]
    p: float = 2.0
    r: Union[float, str] = 2.0
    mc_samples: Optional[int] = None
    seed: Optional[int] = None


class QErrResponse(BaseModel):
    value: float
    method: Literal["discrete", "analytic", "mc"]
    std_error: Optional[float] = None


class LloydRequest(BaseModel):
    measure: MeasureSpec
    n: int = Field(ge=1)
    iters: int = 100
    seed: int = 0
    pool_size: Optional[int] = None
    init: Optional[list] = None


class LloydResponse(BaseModel):
    grid: list[list[float]]
    distortion: float
    iterations: int
    distinct_points: int


class QDistRequest(BaseModel):
    mu: MeasureSpec
    nu: MeasureSpec
    n: int = Field(ge=1)
    p: float = 2.0
    r: Union[float, str] = 2.0
    box: Optional[tuple[float, float]] = None
    restarts: int = 5
    seed: int = 0
    pitch: Optional[float] = None
    mc_samples: Optional[int] = None


class QDistResponse(BaseModel):
    lower_bound: float
    argmax_grid: list[list[float]]
    evaluations: int
    search_box: tuple[float, float]
    converged_restarts: int
    pitch: float


class WassersteinRequest(BaseModel):
    mu: MeasureSpec
    nu: MeasureSpec
    p: float = 2.0


class AssignmentRequest(BaseModel):
    xs: list[list[float]]
    ys: list[list[float]]
    p: float = 2.0
    r: Union[float, str] = 2.0


class TransportResponse(BaseModel):
    value: float
    plan_kind: Literal["quantile_1d", "assignment"]


class CoveringRequest(BaseModel):
    dim: int = Field(ge=1)
    r: Union[float, str] = 2.0
    samples: int = 100_000
    seed: int = 0


class CoveringResponse(BaseModel):
    centers: list[list[float]]
    r: Union[float, str]
    max_min_distance: float
    valid: bool


class MollifyRequest(BaseModel):
    measure: MeasureSpec
    p: float = 2.0
    eps: float = Field(gt=0.0)
    xs: list[float]
    r: Union[float, str] = 2.0
    mc_samples: Optional[int] = None
    seed: Optional[int] = None


class MollifyResponse(BaseModel):
    rows: list[tuple[float, float]]  # (x, density_estimate)
    c_phi: float


class CdfExtractRequest(BaseModel):
    measure: MeasureSpec
    xs: list[float]
    h: Optional[float] = None
    mc_samples: Optional[int] = None
    seed: Optional[int] = None


class CdfExtractResponse(BaseModel):
    rows: list[tuple[float, float]]  # (x, F_estimate)


class AssertionModel(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class ExperimentResponse(BaseModel):
    experiment: str
    columns: list[str]
    rows: list[dict]
    assertions: list[AssertionModel]
    passed: bool
    config: dict


class CounterexampleRequest(BaseModel):
    N: int = Field(default=2, ge=2)
    n_max: int = 8
    grid_budget: int = 1000
    seed: int = 0
    lattice_half_width: float = 10.0
    pitch: float = 0.25


class GridLawRequest(BaseModel):
    family: str = "normal"
    Ns: list[int] = Field(default=[10, 25, 50, 100])
    lloyd_iters: Optional[int] = None
    pool_size: int = 400_000
    seed: int = 1


class EquivalenceRequest(BaseModel):
    family: str = "shrinking-dirac"
    N: int = 2
    p: Optional[float] = None
    n_list: list[int] = Field(default=[1, 2, 3, 4, 5, 6, 7, 8])
    lattice_half_width: float = 10.0
    pitch: float = 0.5
