"""Adaptive composite Gauss–Legendre quadrature split at density breakpoints."""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Callable, Iterable, Tuple

import numpy as np

logger = logging.getLogger(__name__)

ORDER = 16
RTOL = 1e-10
ATOL = 1e-14
MAX_DEPTH = 40

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=8)
def _rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _gauss(func: Integrand, a: float, b: float, order: int) -> float:
    nodes, weights = _rule(order)
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * nodes
    return half * float(np.dot(weights, func(x)))


def _adaptive(func: Integrand, a: float, b: float, rtol: float, order: int) -> float:
    whole = _gauss(func, a, b, order)
    stack = [(a, b, whole, 0)]
    total = 0.0
    while stack:
        lo, hi, estimate, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _gauss(func, lo, mid, order)
        right = _gauss(func, mid, hi, order)
        refined = left + right
        if abs(refined - estimate) <= max(rtol * abs(refined), ATOL * (hi - lo)) or depth >= MAX_DEPTH:
            if depth >= MAX_DEPTH:
                logger.debug("quadrature hit max depth on [%.6g, %.6g]", lo, hi)
            total += refined
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return total


def integrate(
    func: Integrand,
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    rtol: float = RTOL,
    order: int = ORDER,
) -> float:
    """∫ₐᵇ func, refining each piece between breakpoints until halves agree to ``rtol``."""
    if b <= a:
        return 0.0
    cuts = sorted({a, b, *(float(p) for p in breakpoints if a < p < b)})
    return sum(_adaptive(func, lo, hi, rtol, order) for lo, hi in zip(cuts[:-1], cuts[1:]))


def integrate_circular(
    func: Integrand,
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    rtol: float = RTOL,
    full_circle: bool = False,
) -> float:
    """∫ₐᵇ* func with wrap-around; coincident endpoints give 0 unless ``full_circle``."""
    points = list(breakpoints)
    if a < b:
        return integrate(func, a, b, points, rtol)
    if a == b and not full_circle:
        return 0.0
    return integrate(func, a, 1.0, points, rtol) + integrate(func, 0.0, b, points, rtol)
