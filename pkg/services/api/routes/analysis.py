import asyncio
import math
from typing import List, Optional

from fastapi import APIRouter

from ..models.schemas import (
    CycleStats,
    ExhaustiveRequest,
    ExhaustiveResult,
    GGResult,
    LimitResult,
    LimitsRequest,
    ScenarioSpec,
    SolverSummary,
)
from ..services.exhaustive_analysis import analyse_exhaustive
from ..services.gg_analysis import cycle_moments, gg_mean_delivery, gg_mean_sojourn
from ..services.limits import exhaustive_limits, gg_limits
from ..services.scenarios import build_parameters

router = APIRouter()


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return value


def _gg(scenario: ScenarioSpec) -> GGResult:
    params = build_parameters(scenario)
    stats = cycle_moments(params)
    return GGResult(
        rho=params.rho,
        sojourn=gg_mean_sojourn(params),
        delivery=gg_mean_delivery(params),
        cycle=CycleStats(
            mean=stats.mean_c,
            second_moment=stats.second_moment_c,
            mean_residual=stats.mean_residual,
            mean_length_biased=stats.mean_length_biased,
        ),
    )


def _exhaustive(request: ExhaustiveRequest) -> ExhaustiveResult:
    params = build_parameters(request.scenario)
    summary = analyse_exhaustive(params, request.grid, request.delta)
    report = summary.report
    return ExhaustiveResult(
        rho=params.rho,
        waiting_customers=summary.waiting_customers,
        sojourn=summary.sojourn,
        sojourn_bound=summary.sojourn_bound,
        delivery=summary.delivery,
        delivery_bound=summary.delivery_bound,
        solver=SolverSummary(
            iterations=report.iterations,
            achieved_delta=report.achieved_delta,
            regularity_margin=_finite(report.regularity_margin),
            shift_applied=report.shift_applied,
            error_bound_g=report.error_bound_g,
        ),
    )


@router.post("/gg", response_model=GGResult)
async def analyse_gg(scenario: ScenarioSpec):
    """Closed-form globally gated means and cycle statistics."""
    return _gg(scenario)


@router.post("/exhaustive", response_model=ExhaustiveResult)
async def analyse_exhaustive_route(request: ExhaustiveRequest):
    """Exhaustive means with certified error bounds; the grid solve runs off the event loop."""
    return await asyncio.to_thread(_exhaustive, request)


@router.post("/limits", response_model=List[LimitResult])
async def limits(request: LimitsRequest):
    params = build_parameters(request.scenario)
    results = []
    for compute in (gg_limits, exhaustive_limits):
        report = compute(params, request.regime)
        results.append(
            LimitResult(
                policy=report.policy,
                regime=report.regime,
                scaling=report.scaling,
                sojourn_limit=report.sojourn_limit,
                delivery_limit=report.delivery_limit,
                policy_gap_sojourn=report.policy_gap_sojourn,
                policy_gap_delivery=report.policy_gap_delivery,
            )
        )
    return results
