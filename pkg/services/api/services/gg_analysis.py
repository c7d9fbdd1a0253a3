"""
Exact analysis of the globally-gated discipline.

The gate is set at every depot crossing: customers present at that instant
are served during the next cycle, everybody else waits for the following
gate. The cycle-length LST is the infinite product

    φ_C(ω) = exp(−α·Σᵢ δᵢ(ω)),   δ₀ = ω,   δᵢ₊₁ = λ[1 − K̃(φ_B(δᵢ))],

whose terms contract by a factor ρ per step. Means are taken from the closed
forms, never by differentiating transforms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import InvalidConfig
from .model_core import SystemParameters
from .quadrature import integrate

logger = logging.getLogger(__name__)

LST_TOL = 1e-14
SOJOURN_LST_RTOL = 1e-9
_MAX_TERMS = 100_000


def delta_sequence(params: SystemParameters, omega: float, tol: float = LST_TOL) -> List[float]:
    """δ₀..δₙ where n is the first index with δₙ < tol."""
    if omega < 0.0:
        raise InvalidConfig("omega must be >= 0")
    if tol <= 0.0:
        raise InvalidConfig("tol must be > 0")
    terms = [float(omega)]
    while terms[-1] >= tol and len(terms) < _MAX_TERMS:
        d = terms[-1]
        terms.append(params.lam * (1.0 - params.batch.pgf(params.service.lst(d))))
    return terms


def _delta_sum(params: SystemParameters, omega) -> np.ndarray:
    """Σᵢ δᵢ(ω) elementwise for an array of arguments."""
    d = np.asarray(omega, dtype=float).copy()
    total = d.copy()
    steps = 0
    while np.any(d >= LST_TOL) and steps < _MAX_TERMS:
        d = params.lam * (1.0 - np.asarray(params.batch.pgf(params.service.lst(d))))
        total += d
        steps += 1
    return total


def cycle_lst(params: SystemParameters, omega):
    """φ_C(ω); accepts scalars or arrays."""
    values = np.exp(-params.alpha * _delta_sum(params, omega))
    return float(values) if np.ndim(omega) == 0 else values


def lst_tolerance(params: SystemParameters) -> float:
    """Bound on |φ_C − truncated product| from the geometric tail after δₙ < LST_TOL."""
    rho = params.rho
    return params.alpha * LST_TOL * rho / (1.0 - rho)


@dataclass(frozen=True)
class CycleStatistics:
    mean_c: float
    second_moment_c: float
    mean_residual: float
    mean_length_biased: float
    lst_tolerance: float
    params: SystemParameters

    def lst(self, omega):
        return cycle_lst(self.params, omega)

    @property
    def variance_c(self) -> float:
        return self.second_moment_c - self.mean_c ** 2


def cycle_moments(params: SystemParameters) -> CycleStatistics:
    rho = params.rho
    lam, alpha = params.lam, params.alpha
    b1, b2 = params.service.mean, params.service.second_moment
    k1, k2 = params.batch.mean, params.batch.factorial_moment
    ec = params.mean_cycle
    ec2 = (
        alpha ** 2
        + 2.0 * rho * alpha * ec
        + lam * k1 * b2 * ec
        + lam * b1 ** 2 * k2 * ec
    ) / (1.0 - rho ** 2)
    return CycleStatistics(
        mean_c=ec,
        second_moment_c=ec2,
        mean_residual=ec2 / (2.0 * ec),
        mean_length_biased=ec2 / ec,
        lst_tolerance=lst_tolerance(params),
        params=params,
    )


def joint_age_residual_lst(params: SystemParameters, omega_r: float, omega_p: float) -> float:
    """E[exp(−ω_R·C_R − ω_P·C_P)] for the residual and age of the cycle around a random instant."""
    ec = params.mean_cycle
    if omega_r == omega_p:
        h = 1e-6 * max(1.0, omega_r)
        slope = (cycle_lst(params, omega_r + h) - cycle_lst(params, max(omega_r - h, 0.0))) / (
            omega_r + h - max(omega_r - h, 0.0)
        )
        return -slope / ec
    return (cycle_lst(params, omega_r) - cycle_lst(params, omega_p)) / (ec * (omega_p - omega_r))


def gg_delivery_lst(params: SystemParameters, omega: float) -> float:
    """LST of the time to delivery D; equals 1 at ω = 0 by continuity."""
    if omega < 0.0:
        raise InvalidConfig("omega must be >= 0")
    if omega == 0.0:
        return 1.0
    ec = params.mean_cycle
    k_tilde = params.batch.pgf(params.service.lst(omega))
    shift = params.lam * (1.0 - k_tilde)
    gap = cycle_lst(params, shift) - cycle_lst(params, omega + shift)
    return float(k_tilde * np.exp(-omega * params.alpha) / (omega * ec) * gap)


def gg_mean_delivery(params: SystemParameters) -> float:
    stats = cycle_moments(params)
    return (
        params.service.mean * params.batch.mean
        + params.alpha
        + (1.0 + 2.0 * params.rho) * stats.mean_residual
    )


def gg_sojourn_lst(params: SystemParameters, omega: float) -> float:
    """LST of the batch sojourn time S^B; the x-integral is adaptive per density segment."""
    if omega < 0.0:
        raise InvalidConfig("omega must be >= 0")
    if omega == 0.0:
        return 1.0
    loc, batch, lam = params.location, params.batch, params.lam
    phi_b = params.service.lst(omega)
    ec = params.mean_cycle

    def integrand(x: np.ndarray) -> np.ndarray:
        big_pi = np.asarray(loc.cdf(x))
        shift = lam - lam * np.asarray(batch.pgf(1.0 - big_pi + big_pi * phi_b))
        gap = cycle_lst(params, shift) - cycle_lst(params, omega + shift)
        return (
            np.asarray(loc.pdf(x))
            * np.asarray(batch.pgf_prime(big_pi * phi_b))
            * np.exp(-omega * params.alpha * x)
            * gap
        )

    value = integrate(integrand, 0.0, 1.0, loc.breakpoints[1:-1], rtol=SOJOURN_LST_RTOL)
    return float(phi_b / (omega * ec) * value)


def pgf_of_cdf_integral(params: SystemParameters) -> float:
    """∫₀¹ K̃(Π(x)) dx."""
    loc, batch = params.location, params.batch
    return integrate(lambda x: np.asarray(batch.pgf(loc.cdf(x))), 0.0, 1.0, loc.breakpoints[1:-1])


def gg_mean_sojourn(params: SystemParameters) -> float:
    stats = cycle_moments(params)
    return (
        params.service.mean * params.batch.mean
        + stats.mean_residual
        + params.alpha
        - params.alpha * pgf_of_cdf_integral(params)
        + params.rho * stats.mean_length_biased * params.batch.mean_ratio
    )
