"""
Light- and heavy-traffic limits for both disciplines.

Light-regime values are in time units (λ → 0). Heavy-regime values are the
limits of (1 − ρ)·metric as ρ ↑ 1 and never depend on the location density.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .errors import InvalidConfig
from .exhaustive_analysis import pair_pgf_integral, tail_pgf_integral
from .gg_analysis import pgf_of_cdf_integral
from .model_core import SystemParameters, distance

GLOBALLY_GATED = "globally_gated"
EXHAUSTIVE = "exhaustive"
POLICIES = (GLOBALLY_GATED, EXHAUSTIVE)
REGIMES = ("light", "heavy")

SCALING = {"light": "time", "heavy": "(1-rho)*time"}


@dataclass(frozen=True)
class LimitReport:
    policy: str
    regime: str
    sojourn_limit: float
    delivery_limit: float
    policy_gap_sojourn: float
    policy_gap_delivery: float

    @property
    def scaling(self) -> str:
        return SCALING[self.regime]


def _check_regime(regime: str) -> None:
    if regime not in REGIMES:
        raise InvalidConfig(f"regime must be one of {REGIMES}, got '{regime}'")


def _work(params: SystemParameters) -> float:
    return params.service.mean * params.batch.mean


def _gg_pair(params: SystemParameters, regime: str) -> Tuple[float, float]:
    alpha = params.alpha
    if regime == "light":
        delivery = _work(params) + 1.5 * alpha
        return delivery - alpha * pgf_of_cdf_integral(params), delivery
    service, batch = params.service, params.batch
    m = alpha + service.residual_mean + service.mean * batch.factorial_moment / (2.0 * batch.mean)
    return m * (0.5 + batch.mean_ratio), 1.5 * m


def _exhaustive_pair(params: SystemParameters, regime: str) -> Tuple[float, float]:
    alpha = params.alpha
    if regime == "light":
        sojourn = _work(params) + alpha - alpha * pair_pgf_integral(params)
        delivery = _work(params) + 1.5 * alpha - alpha * tail_pgf_integral(params)
        return sojourn, delivery
    service, batch = params.service, params.batch
    h = alpha + service.second_moment / service.mean + service.mean * batch.factorial_moment / batch.mean
    return h * batch.mean_ratio, h * (batch.mean_ratio + 0.5)


def policy_gap(params: SystemParameters, regime: str) -> Tuple[float, float]:
    """(sojourn gap, delivery gap), globally gated minus exhaustive."""
    _check_regime(regime)
    gg_s, gg_d = _gg_pair(params, regime)
    ex_s, ex_d = _exhaustive_pair(params, regime)
    return gg_s - ex_s, gg_d - ex_d


def gg_limits(params: SystemParameters, regime: str) -> LimitReport:
    _check_regime(regime)
    sojourn, delivery = _gg_pair(params, regime)
    gap_s, gap_d = policy_gap(params, regime)
    return LimitReport(GLOBALLY_GATED, regime, sojourn, delivery, gap_s, gap_d)


def exhaustive_limits(params: SystemParameters, regime: str) -> LimitReport:
    _check_regime(regime)
    sojourn, delivery = _exhaustive_pair(params, regime)
    gap_s, gap_d = policy_gap(params, regime)
    return LimitReport(EXHAUSTIVE, regime, sojourn, delivery, gap_s, gap_d)


def light_spread_limit(params: SystemParameters, x, y):
    """lim f(x, y)/(λE[K]) as λ → 0."""
    loc = params.location
    d = distance(x, y)
    px = loc.pdf(x)
    ratio = params.batch.factorial_moment / params.batch.mean
    return params.alpha * px * d + params.service.mean * ratio * px * loc.pdf(y) * d
