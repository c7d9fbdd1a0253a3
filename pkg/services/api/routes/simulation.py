import asyncio

from fastapi import APIRouter

from ..models.schemas import Estimate, SimulationRequest, SimulationResult
from ..services.scenarios import build_parameters
from ..services.simulator import SimulationConfig, simulate

router = APIRouter()


def _run(request: SimulationRequest) -> SimulationResult:
    params = build_parameters(request.scenario)
    config = SimulationConfig(
        params,
        request.policy,
        measured_batches=request.measured_batches,
        replications=request.replications,
        seed=request.seed,
    )
    estimates = simulate(config)
    return SimulationResult(
        policy=request.policy,
        rho=params.rho,
        estimates=[
            Estimate(
                metric=e.metric,
                mean=e.mean,
                ci_half_width=e.ci_half_width,
                replications=e.replications,
                total_batches=e.total_batches,
            )
            for e in estimates
        ],
    )


@router.post("", response_model=SimulationResult)
async def run_simulation(request: SimulationRequest):
    """Seeded discrete-event simulation; the same seed gives the same estimates."""
    return await asyncio.to_thread(_run, request)
