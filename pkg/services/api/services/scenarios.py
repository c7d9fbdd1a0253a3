"""Scenario and sweep files: JSON on disk, validated with the API schemas."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Tuple, Union

from pydantic import ValidationError

from ..models.schemas import BatchSpec, LocationSpec, ScenarioSpec, ServiceSpec, SweepSpec
from .errors import InvalidConfig
from .model_core import (
    BatchSizeDistribution,
    LocationDensity,
    ServiceTimeDistribution,
    SystemParameters,
)

logger = logging.getLogger(__name__)

ROOT = Path(__file__).resolve().parents[3]
SCENARIO_DIR = ROOT / "contrib" / "scenarios"

PathLike = Union[str, Path]


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return "; ".join(parts)


def build_batch(spec: BatchSpec) -> BatchSizeDistribution:
    if spec.kind == "deterministic":
        return BatchSizeDistribution.deterministic(spec.size)
    if spec.kind == "pmf":
        return BatchSizeDistribution.from_pmf(spec.pmf)
    return BatchSizeDistribution.shifted_poisson(spec.mean)


def build_service(spec: ServiceSpec) -> ServiceTimeDistribution:
    if spec.kind == "deterministic":
        return ServiceTimeDistribution.deterministic(spec.value)
    if spec.kind == "exponential":
        rate = spec.rate if spec.rate is not None else 1.0 / spec.mean
        return ServiceTimeDistribution.exponential(rate)
    return ServiceTimeDistribution.from_moments(spec.mean, spec.second_moment)


def build_location(spec: LocationSpec) -> LocationDensity:
    if spec.kind == "uniform":
        density = LocationDensity.uniform()
    elif spec.kind == "piecewise":
        density = LocationDensity.piecewise([(s.start, s.coefficients) for s in spec.segments])
    elif spec.kind == "polynomial":
        density = LocationDensity.polynomial(spec.coefficients)
    elif spec.kind == "interval":
        density = LocationDensity.interval(spec.start, spec.end)
    elif spec.kind == "beta":
        density = LocationDensity.beta(spec.a, spec.b, spec.pieces)
    else:
        names = [c.name for c in spec.classes]
        order = None if spec.order is None else [names.index(n) for n in spec.order]
        density = LocationDensity.class_based(
            [c.demand for c in spec.classes],
            [c.space for c in spec.classes],
            order,
        )
    if spec.floor is not None:
        density = density.with_floor(spec.floor)
    return density


def build_parameters(spec: ScenarioSpec) -> SystemParameters:
    """Turn a validated scenario into model parameters; ``rho`` rescales λ."""
    params = SystemParameters(
        lam=spec.lambda_ if spec.lambda_ is not None else 0.0,
        alpha=spec.alpha,
        batch=build_batch(spec.batch),
        service=build_service(spec.service),
        location=build_location(spec.location),
    )
    if spec.rho is not None:
        params = params.with_load(spec.rho)
    return params


def _load_json(path: Path) -> dict:
    try:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InvalidConfig(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def resolve_path(path: PathLike) -> Path:
    """Accept a file path or the name of a bundled scenario (``warehouse``)."""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    if candidate.parent == Path("."):
        name = candidate.name if candidate.suffix == ".json" else f"{candidate.name}.json"
        bundled = SCENARIO_DIR / name
        if bundled.exists():
            return bundled
    return candidate


def parse_scenario(data: dict, source: str = "<scenario>") -> ScenarioSpec:
    try:
        return ScenarioSpec.model_validate(data)
    except ValidationError as exc:
        raise InvalidConfig(f"{source}: {_format_validation(exc)}") from None


def load_scenario_spec(path: PathLike) -> ScenarioSpec:
    resolved = resolve_path(path)
    return parse_scenario(_load_json(resolved), str(resolved))


def load_scenario(path: PathLike) -> SystemParameters:
    spec = load_scenario_spec(path)
    params = build_parameters(spec)
    logger.info("loaded scenario %s (rho=%.6g)", spec.name or Path(path).stem, params.rho)
    return params


def load_sweep(path: PathLike) -> Tuple[SweepSpec, SystemParameters]:
    """Load a sweep file and the scenario it points at (relative to the sweep file)."""
    resolved = resolve_path(path)
    try:
        sweep = SweepSpec.model_validate(_load_json(resolved))
    except ValidationError as exc:
        raise InvalidConfig(f"{resolved}: {_format_validation(exc)}") from None
    scenario_path = Path(sweep.scenario)
    if not scenario_path.is_absolute():
        local = resolved.parent / scenario_path
        scenario_path = local if local.exists() else scenario_path
    return sweep, load_scenario(scenario_path)
