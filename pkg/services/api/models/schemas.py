from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Policy = Literal["globally_gated", "exhaustive"]
Regime = Literal["light", "heavy"]
SweepMetric = Literal["sojourn", "delivery", "waiting_customers"]

_MAX_API_GRID = 1024
_MAX_API_BATCHES = 200_000


# ─── Scenario files ──────────────────────────────────────────────────────────

class BatchSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["deterministic", "pmf", "shifted_poisson"]
    size: Optional[int] = Field(default=None, ge=1)
    pmf: Optional[Union[Dict[int, float], List[float]]] = None
    mean: Optional[float] = Field(default=None, ge=1.0)

    @model_validator(mode="after")
    def check_fields(self):
        required = {"deterministic": "size", "pmf": "pmf", "shifted_poisson": "mean"}[self.kind]
        if getattr(self, required) is None:
            raise ValueError(f"batch kind '{self.kind}' requires '{required}'")
        return self


class ServiceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["deterministic", "exponential", "moments"]
    value: Optional[float] = Field(default=None, gt=0)
    rate: Optional[float] = Field(default=None, gt=0)
    mean: Optional[float] = Field(default=None, gt=0)
    second_moment: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_fields(self):
        if self.kind == "deterministic" and self.value is None:
            raise ValueError("deterministic service requires 'value'")
        if self.kind == "exponential" and (self.rate is None) == (self.mean is None):
            raise ValueError("exponential service requires exactly one of 'rate' or 'mean'")
        if self.kind == "moments" and (self.mean is None or self.second_moment is None):
            raise ValueError("moments service requires 'mean' and 'second_moment'")
        return self


class SegmentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: float = Field(ge=0.0, lt=1.0)
    coefficients: List[float] = Field(min_length=1, max_length=4)


class StorageClassSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    demand: float = Field(ge=0.0, le=1.0)
    space: float = Field(gt=0.0, le=1.0)


class LocationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["uniform", "piecewise", "polynomial", "interval", "beta", "class_based"]
    segments: Optional[List[SegmentSpec]] = None
    coefficients: Optional[List[float]] = None
    start: Optional[float] = None
    end: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    pieces: int = Field(default=64, ge=1, le=4096)
    classes: Optional[List[StorageClassSpec]] = None
    order: Optional[List[str]] = None
    floor: Optional[float] = Field(default=None, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def check_fields(self):
        needs = {
            "piecewise": ("segments",),
            "polynomial": ("coefficients",),
            "interval": ("start", "end"),
            "beta": ("a", "b"),
            "class_based": ("classes",),
        }.get(self.kind, ())
        missing = [name for name in needs if getattr(self, name) is None]
        if missing:
            raise ValueError(f"location kind '{self.kind}' requires {missing}")
        if self.segments is not None:
            starts = [s.start for s in self.segments]
            if starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:])):
                raise ValueError("segment starts must begin at 0 and increase strictly")
        if self.order is not None and self.classes is not None:
            if sorted(self.order) != sorted(c.name for c in self.classes):
                raise ValueError("order must list every storage class exactly once")
        return self


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    version: int = 1
    name: Optional[str] = None
    description: Optional[str] = None
    lambda_: Optional[float] = Field(default=None, alias="lambda", ge=0.0)
    alpha: float = Field(gt=0.0)
    batch: BatchSpec
    service: ServiceSpec
    location: LocationSpec
    rho: Optional[float] = Field(default=None, ge=0.0)

    @model_validator(mode="after")
    def check_load(self):
        if (self.lambda_ is None) == (self.rho is None):
            raise ValueError("give exactly one of 'lambda' or 'rho'")
        return self


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: str
    sweep: Literal["rho_via_lambda"] = "rho_via_lambda"
    values: List[float] = Field(min_length=1)
    policies: List[Policy] = Field(default_factory=lambda: ["globally_gated", "exhaustive"], min_length=1)
    outputs: List[SweepMetric] = Field(default_factory=lambda: ["sojourn", "delivery"], min_length=1)
    simulate: bool = False
    grid: Optional[int] = Field(default=None, ge=16)
    delta: Optional[float] = Field(default=None, gt=0.0)
    replications: int = Field(default=5, ge=3)
    measured_batches: int = Field(default=20_000, ge=1000)
    seed: int = Field(default=0, ge=0)

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: List[float]) -> List[float]:
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if any(not 0.0 < x < 1.0 for x in v):
            raise ValueError("every swept rho must lie in (0, 1)")
        return v


# ─── HTTP requests ───────────────────────────────────────────────────────────

class ExhaustiveRequest(BaseModel):
    scenario: ScenarioSpec
    grid: int = 256
    delta: float = Field(default=1e-9, gt=0.0)

    @field_validator("grid")
    @classmethod
    def validate_grid(cls, v: int) -> int:
        if not 16 <= v <= _MAX_API_GRID:
            raise ValueError(f"grid must lie between 16 and {_MAX_API_GRID}.")
        return v


class LimitsRequest(BaseModel):
    scenario: ScenarioSpec
    regime: Regime


class SimulationRequest(BaseModel):
    scenario: ScenarioSpec
    policy: Policy
    seed: int = Field(default=0, ge=0)
    replications: int = Field(default=5, ge=3, le=64)
    measured_batches: int = 10_000

    @field_validator("measured_batches")
    @classmethod
    def validate_batches(cls, v: int) -> int:
        if not 1000 <= v <= _MAX_API_BATCHES:
            raise ValueError(f"measured_batches must lie between 1000 and {_MAX_API_BATCHES}.")
        return v


# ─── HTTP responses ──────────────────────────────────────────────────────────

class CycleStats(BaseModel):
    mean: float
    second_moment: float
    mean_residual: float
    mean_length_biased: float


class GGResult(BaseModel):
    rho: float
    sojourn: float
    delivery: float
    cycle: CycleStats


class SolverSummary(BaseModel):
    iterations: int
    achieved_delta: float
    regularity_margin: Optional[float] = None
    shift_applied: Optional[float] = None
    error_bound_g: float


class ExhaustiveResult(BaseModel):
    rho: float
    waiting_customers: float
    sojourn: float
    sojourn_bound: float
    delivery: float
    delivery_bound: float
    solver: SolverSummary


class LimitResult(BaseModel):
    policy: Policy
    regime: Regime
    scaling: str
    sojourn_limit: float
    delivery_limit: float
    policy_gap_sojourn: float
    policy_gap_delivery: float


class Estimate(BaseModel):
    metric: str
    mean: float
    ci_half_width: float
    replications: int
    total_batches: int


class SimulationResult(BaseModel):
    policy: Policy
    rho: float
    estimates: List[Estimate]
