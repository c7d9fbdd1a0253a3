"""
Mean-value analysis of the exhaustive discipline.

The spread function f(x, y), the mean density of waiting customers at x
while the server sits at y, splits into three parts:

  f_alpha   travel contribution, closed form
  f_br      residual-service contribution, closed form
  f_K       batch contribution; known in closed form only for uniform π and
            otherwise obtained on an N×N grid by successive substitution

The grid iterates the transformed function g with f_K(x, y) = π(x)·g(x, y)/Ψ(y),
Ψ(y) = ρπ(y) + 1 − ρ, using left Riemann sums and wrap-around arcs:

    g_{m+1}(i, j) = (ρ/N)·π(j)·Σ_{k=i}^{j−1} [g_m(i, k) + g_m(j, k)] + b(i, j),
    b(x, y)       = ρ·(E[K(K−1)]/E[K])·π(y)·∫ₓʸ* Ψ.

Every solve reports a certified sup bound on g, which propagates into the
bounds returned with E[S^B] and E[D].
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from .errors import GridMismatch, InvalidConfig, NonPositiveDensity, RegularityViolation
from .model_core import SystemParameters, distance, server_location_density
from .quadrature import integrate, integrate_circular

logger = logging.getLogger(__name__)

DEFAULT_GRID = 256
DEFAULT_DELTA = 1e-9
MIN_GRID = 16
SHIFT_SCAN = 16
MAX_ITERATIONS = 200_000
KERNEL_RTOL = 1e-10
INNER_RTOL = 1e-12


# ─── Helpers ─────────────────────────────────────────────────────────────────

def _expm1_over(z):
    """expm1(z)/z, equal to 1 at z = 0."""
    z_arr = np.asarray(z, dtype=float)
    safe = np.where(z_arr == 0.0, 1.0, z_arr)
    out = np.where(z_arr == 0.0, 1.0, np.expm1(safe) / safe)
    return float(out) if out.ndim == 0 else out


def _psi_arc(params: SystemParameters, a, b):
    """∫ₐᵇ* Ψ = ρ·∫ₐᵇ* π + (1 − ρ)·d(a, b)."""
    rho = params.rho
    return rho * np.asarray(params.location.circular_integral(a, b)) + (1.0 - rho) * np.asarray(
        distance(a, b)
    )


def _breaks(params: SystemParameters) -> np.ndarray:
    return params.location.breakpoints[1:-1]


def _batch_ratio(params: SystemParameters) -> float:
    """E[K(K − 1)]/E[K]."""
    return params.batch.factorial_moment / params.batch.mean


# ─── Closed-form quantities ──────────────────────────────────────────────────

def expected_waiting_customers(params: SystemParameters) -> float:
    """E[L]; independent of the arrival-location density."""
    rho = params.rho
    service = params.service
    return params.customer_rate / (2.0 * (1.0 - rho)) * (
        params.alpha
        + rho * service.second_moment / service.mean
        + service.mean * _batch_ratio(params)
    )


def generated_wait_service(params: SystemParameters, x, y):
    """E[S(x, y)]: delay at y generated by one service started at x."""
    out = params.service.mean * np.exp(params.rho * np.asarray(params.location.circular_integral(x, y)))
    return float(out) if np.ndim(out) == 0 else out


def generated_wait_residual(params: SystemParameters, x, y):
    """Same kernel generated by a residual service; prefactor E[B²]/(2E[B])."""
    out = params.service.residual_mean * np.exp(
        params.rho * np.asarray(params.location.circular_integral(x, y))
    )
    return float(out) if np.ndim(out) == 0 else out


def generated_wait_travel(params: SystemParameters, x: float, y: float, full_circle: bool = False) -> float:
    """E[T(x, y)] = α ∫ₓʸ* exp(ρ ∫ᵤʸ* π) du. Zero at x = y unless ``full_circle``."""
    loc, rho = params.location, params.rho

    def integrand(u: np.ndarray) -> np.ndarray:
        return np.exp(rho * np.asarray(loc.circular_integral(u, y)))

    return params.alpha * integrate_circular(
        integrand, x, y, _breaks(params), rtol=KERNEL_RTOL, full_circle=full_circle
    )


def _delivery_far_kernel(rho: float, tail):
    return np.exp(rho + rho * tail) - rho * tail * np.exp(rho * tail)


def generated_delivery_service(params: SystemParameters, x, y):
    """Extra time to delivery at y generated by one service at x."""
    rho = params.rho
    tail = np.asarray(params.location.tail(x))
    near = np.exp(rho * tail)
    far = _delivery_far_kernel(rho, tail)
    out = params.service.mean * np.where(np.asarray(x) <= np.asarray(y), near, far)
    return float(out) if out.ndim == 0 else out


def generated_delivery_travel(params: SystemParameters, x: float, y: float) -> float:
    """Extra time to delivery at y generated by the server travelling from x."""
    loc, rho, alpha = params.location, params.rho, params.alpha
    bps = _breaks(params)

    def near(u: np.ndarray) -> np.ndarray:
        return np.exp(rho * np.asarray(loc.tail(u)))

    if x <= y:
        return alpha * integrate(near, x, 1.0, bps, rtol=KERNEL_RTOL)

    def far(u: np.ndarray) -> np.ndarray:
        return _delivery_far_kernel(rho, np.asarray(loc.tail(u)))

    return alpha * (
        integrate(far, x, 1.0, bps, rtol=KERNEL_RTOL) + integrate(near, 0.0, 1.0, bps, rtol=KERNEL_RTOL)
    )


def partial_spread(params: SystemParameters, x, y) -> Tuple:
    """(f_alpha, f_br) at (x, y); vectorized over matching arrays."""
    rho, loc = params.rho, params.location
    service = params.service
    rate = params.customer_rate
    px = np.asarray(loc.pdf(x))
    py = np.asarray(loc.pdf(y))
    arc = np.asarray(loc.circular_integral(x, y))
    f_alpha = rate * px * params.alpha / (1.0 - rho) * _psi_arc(params, x, y)
    weight = rho * py / np.asarray(server_location_density(params, y)) * rate * px
    f_br = weight * (
        service.residual_mean + rho * service.second_moment / ((1.0 - rho) * service.mean) * arc
    )
    if np.ndim(f_alpha) == 0:
        return float(f_alpha), float(f_br)
    return f_alpha, f_br


# ─── Grid solver ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SolverReport:
    regularity_margin: float
    shift_applied: Optional[float]
    error_bound_g: float
    error_bound_fk: float
    error_bound_esb: float
    error_bound_ed: float
    iterations: int
    achieved_delta: float
    contraction_ratio: float
    epsilon: float
    zeta: float
    rho: float
    pi_grid_max: float
    differences: Tuple[float, ...]

    def envelope(self, m: int) -> float:
        """Geometric bound on ‖g_m − g_{m−1}‖ valid for m ≥ 4."""
        if m < 4:
            raise InvalidConfig("the envelope holds from the fourth iterate on")
        return 4.0 * self.rho * self.pi_grid_max * self.contraction_ratio ** (m - 2) * self.differences[0]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """g and f_K on nodes x_i = shift + i/n; ``values[i, j] = g(x_i, x_j)``."""

    n: int
    shift: float
    values: np.ndarray
    fk: np.ndarray
    achieved_delta: float
    iterations: int
    zeta: float
    params_key: tuple

    @property
    def nodes(self) -> np.ndarray:
        return self.shift + np.arange(self.n) / self.n

    def interpolate(self, x, y, which: str = "fk"):
        """Bilinear, wrap-aware interpolation of ``fk`` or ``g``."""
        table = self.fk if which == "fk" else self.values
        tx = np.mod((np.asarray(x, dtype=float) - self.shift) * self.n, self.n)
        ty = np.mod((np.asarray(y, dtype=float) - self.shift) * self.n, self.n)
        i0 = np.floor(tx).astype(int) % self.n
        j0 = np.floor(ty).astype(int) % self.n
        i1 = (i0 + 1) % self.n
        j1 = (j0 + 1) % self.n
        wx = tx - np.floor(tx)
        wy = ty - np.floor(ty)
        out = (
            (1 - wx) * (1 - wy) * table[i0, j0]
            + wx * (1 - wy) * table[i1, j0]
            + (1 - wx) * wy * table[i0, j1]
            + wx * wy * table[i1, j1]
        )
        return float(out) if np.ndim(out) == 0 else out


def _check_grid(params: SystemParameters, grid: GridFunction) -> None:
    if grid.params_key != params.key:
        raise GridMismatch("grid was solved for a different parameter set")


def _choose_shift(params: SystemParameters, n: int, require_positive: bool) -> Tuple[float, float]:
    """Smallest node offset from a 16-point scan of [0, 1/n) whose Riemann sum keeps ρ·sum < 1."""
    rho, loc = params.rho, params.location
    for k in range(SHIFT_SCAN):
        shift = k / (SHIFT_SCAN * n)
        pi = np.asarray(loc.pdf(shift + np.arange(n) / n))
        margin = math.inf if rho == 0.0 else 1.0 / rho - float(pi.mean())
        if margin <= 0.0:
            continue
        if k:
            logger.info("grid shifted by %.6g to restore regularity (margin %.6g)", shift, margin)
        if require_positive and np.any(pi <= 0.0):
            raise NonPositiveDensity(
                "the arrival density vanishes at a grid node; add a uniform floor "
                "(e.g. 1e-8) to the location density and retry"
            )
        return shift, margin
    raise RegularityViolation(
        f"Riemann sum of the density exceeds 1/rho={1.0 / rho:.6g} for every scanned grid shift"
    )


def _propagated_bounds(params: SystemParameters, zeta: float) -> Tuple[float, float]:
    rho = params.rho
    mean_b = params.service.mean
    return mean_b * zeta * _expm1_over(rho), mean_b * zeta * math.exp(2.0 * rho)


def _error_terms(
    params: SystemParameters, nodes: np.ndarray, pi: np.ndarray, delta: float, c_k: float
) -> Tuple[float, float, float]:
    """(ε, ζ, r) of the certified sup bound on |g* − g_n|/π(y)."""
    rho, loc = params.rho, params.location
    n = nodes.size
    h = 1.0 / n
    pi_max = loc.sup
    riemann = float(pi.mean())
    r = rho * riemann
    b_norm = c_k * pi_max
    cell_mass = np.asarray(loc.circular_integral(nodes, np.mod(nodes + h, 1.0)))
    sup_dev, area_dev = loc.cell_variation(nodes, h)
    c = 2.0 * rho * (1.0 + rho) / (1.0 - rho)
    eps_bx = c_k * pi_max * (rho * cell_mass.max() + (1.0 - rho) * h)
    eps_by = c_k * (sup_dev.max() + pi_max * (rho * cell_mass.max() + (1.0 - rho) * h))
    eps = (
        4.0 * rho ** 2 * (2.0 - rho) * b_norm / (1.0 - rho) * float(np.mean(pi * (h + c * cell_mass)))
        + 2.0 * rho ** 2 * (1.0 + rho) / (1.0 - rho) * eps_bx * riemann
        + 4.0 * rho ** 2 * (1.0 + rho) / (1.0 - rho) * b_norm * float(np.mean(area_dev))
        + 2.0 * rho * eps_by
    )
    zeta = 4.0 * rho * delta / (1.0 - r) + 2.0 * rho * eps * r / (1.0 - r) + eps
    return eps, zeta, r


def _arc_sums(g: np.ndarray, wrap: np.ndarray) -> np.ndarray:
    """Σ_{k=i}^{j−1} [g(i, k) + g(j, k)] along the clockwise arc from i to j."""
    n = g.shape[0]
    prefix = np.zeros((n, n + 1))
    np.cumsum(g, axis=1, out=prefix[:, 1:])
    body = prefix[:, :n]
    row_total = prefix[:, n]
    own = np.diagonal(body)
    first = body - own[:, None] + wrap * row_total[:, None]
    second = own[None, :] - body.T + wrap * row_total[None, :]
    return first + second


def _grid_geometry(params: SystemParameters, nodes: np.ndarray):
    loc = params.location
    n = nodes.size
    idx = np.arange(n)
    wrap = (idx[:, None] > idx[None, :]).astype(float)
    big_pi = np.asarray(loc.cdf(nodes))
    arc_pi = big_pi[None, :] - big_pi[:, None] + wrap
    arc_len = (idx[None, :] - idx[:, None]) / n + wrap
    return wrap, params.rho * arc_pi + (1.0 - params.rho) * arc_len


def solve_fk(
    params: SystemParameters, n: int = DEFAULT_GRID, delta: float = DEFAULT_DELTA
) -> Tuple[GridFunction, SolverReport]:
    """Successive substitution for g from g₀ ≡ 0 until the sup-norm step is ≤ ``delta``."""
    if int(n) != n or n < MIN_GRID:
        raise InvalidConfig(f"grid resolution must be an integer >= {MIN_GRID}")
    if not delta > 0.0:
        raise InvalidConfig("delta must be positive")
    n = int(n)
    rho, loc = params.rho, params.location
    c_k = rho * _batch_ratio(params)

    if c_k == 0.0:
        # single-customer batches: b ≡ 0, so g ≡ 0 after the first iterate
        pi = np.asarray(loc.pdf(np.arange(n) / n))
        margin = math.inf if rho == 0.0 else 1.0 / rho - float(pi.mean())
        zeros = np.zeros((n, n))
        grid = GridFunction(n, 0.0, zeros, zeros.copy(), 0.0, 1, 0.0, params.key)
        report = SolverReport(
            regularity_margin=margin,
            shift_applied=None,
            error_bound_g=0.0,
            error_bound_fk=0.0,
            error_bound_esb=0.0,
            error_bound_ed=0.0,
            iterations=1,
            achieved_delta=0.0,
            contraction_ratio=rho * float(pi.mean()),
            epsilon=0.0,
            zeta=0.0,
            rho=rho,
            pi_grid_max=float(pi.max()),
            differences=(0.0,),
        )
        return grid, report

    shift, margin = _choose_shift(params, n, require_positive=True)
    nodes = shift + np.arange(n) / n
    pi = np.asarray(loc.pdf(nodes))
    psi = rho * pi + 1.0 - rho
    wrap, psi_arc = _grid_geometry(params, nodes)
    b = c_k * pi[None, :] * psi_arc
    scale = rho / n * pi[None, :]

    g = np.zeros((n, n))
    differences = []
    while True:
        updated = scale * _arc_sums(g, wrap) + b
        step = float(np.max(np.abs(updated - g)))
        differences.append(step)
        g = updated
        if step <= delta:
            break
        if len(differences) >= MAX_ITERATIONS:
            raise RegularityViolation(
                f"successive substitution did not reach delta={delta:.3g} in {MAX_ITERATIONS} iterations"
            )

    achieved = differences[-1]
    eps, zeta, r = _error_terms(params, nodes, pi, achieved, c_k)
    fk = pi[:, None] * g / psi[None, :]
    esb_bound, ed_bound = _propagated_bounds(params, zeta)
    report = SolverReport(
        regularity_margin=margin,
        shift_applied=shift if shift > 0.0 else None,
        error_bound_g=float(pi.max()) * zeta,
        error_bound_fk=float(pi.max()) * float(np.max(pi / psi)) * zeta,
        error_bound_esb=esb_bound,
        error_bound_ed=ed_bound,
        iterations=len(differences),
        achieved_delta=achieved,
        contraction_ratio=r,
        epsilon=eps,
        zeta=zeta,
        rho=rho,
        pi_grid_max=float(pi.max()),
        differences=tuple(differences),
    )
    logger.info(
        "solve_fk: n=%d iterations=%d delta=%.3g bound_g=%.3g", n, report.iterations, achieved, report.error_bound_g
    )
    grid = GridFunction(n, shift, g, fk, achieved, len(differences), zeta, params.key)
    return grid, report


# ─── Spread assembly ─────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class SpreadDecomposition:
    params: SystemParameters
    grid: GridFunction

    def f_alpha(self, x, y):
        return partial_spread(self.params, x, y)[0]

    def f_br(self, x, y):
        return partial_spread(self.params, x, y)[1]

    def f_k(self, x, y):
        return self.grid.interpolate(x, y)

    def total(self, x, y):
        return spread(self.params, self.grid, x, y)


def spread_decomposition(params: SystemParameters, grid: GridFunction) -> SpreadDecomposition:
    _check_grid(params, grid)
    return SpreadDecomposition(params, grid)


def spread(params: SystemParameters, grid: GridFunction, x, y):
    """f(x, y) = f_alpha + f_br + bilinear f_K."""
    _check_grid(params, grid)
    f_alpha, f_br = partial_spread(params, x, y)
    out = np.asarray(f_alpha) + np.asarray(f_br) + np.asarray(grid.interpolate(x, y))
    return float(out) if out.ndim == 0 else out


# ─── Mean batch sojourn time ─────────────────────────────────────────────────

def pair_pgf_integral(params: SystemParameters) -> float:
    """J = ∫₀¹∫₀¹ K̃(∫ᵤˣ* π) dx du."""
    loc, batch = params.location, params.batch
    bps = _breaks(params)

    def inner(u: float) -> float:
        def f(x: np.ndarray) -> np.ndarray:
            return np.asarray(batch.pgf(loc.circular_integral(u, x)))

        return integrate(f, 0.0, u, bps, rtol=INNER_RTOL) + integrate(f, u, 1.0, bps, rtol=INNER_RTOL)

    return integrate(lambda us: np.array([inner(float(u)) for u in us]), 0.0, 1.0, bps, rtol=KERNEL_RTOL)


def tail_pgf_integral(params: SystemParameters) -> float:
    """∫₀¹ K̃(∫ᵤ¹ π) du."""
    loc, batch = params.location, params.batch
    return integrate(lambda u: np.asarray(batch.pgf(loc.tail(u))), 0.0, 1.0, _breaks(params), rtol=KERNEL_RTOL)


def _sojourn_grid_term(params: SystemParameters, grid: GridFunction) -> float:
    """E[B]·∫∫ π(x)K̃′(W(u, x)) ∫_{(u, x]} π(y)g(y, u)e^{ρW(y, x)} dy dx du by right-endpoint sums."""
    n, rho, loc = grid.n, params.rho, params.location
    nodes = grid.nodes
    pi = np.asarray(loc.pdf(nodes))
    big_pi = np.asarray(loc.cdf(nodes))
    start = np.arange(n)[:, None]
    order = (start + np.arange(n)[None, :]) % n
    arc = big_pi[order] - big_pi[start] + (order < start)
    inner_terms = pi[order] * grid.values[order, start] * np.exp(-rho * arc)
    inner_terms[:, 0] = 0.0
    inner = np.cumsum(inner_terms, axis=1)
    outer = pi[order] * np.asarray(params.batch.pgf_prime(arc)) * np.exp(rho * arc) * inner
    outer[:, 0] = 0.0
    return params.service.mean * float(outer.sum()) / n ** 3


def exhaustive_mean_sojourn(params: SystemParameters, grid: GridFunction) -> Tuple[float, float]:
    """(E[S^B], certified bound from the grid solve)."""
    _check_grid(params, grid)
    rho, alpha = params.rho, params.alpha
    batch, service = params.batch, params.service
    eb, eb2 = service.mean, service.second_moment
    inverse = batch.mean_inverse

    value = eb + alpha / (1.0 - rho)
    value -= alpha * (2.0 * rho - rho ** 2) / (1.0 - rho) * inverse + (1.0 - rho) * alpha * pair_pgf_integral(params)
    value += rho * (1.0 + rho) * eb2 / (2.0 * (1.0 - rho) * eb)
    value -= rho ** 2 * eb2 / ((1.0 - rho) * eb) * inverse
    # expm1(ρ)/λ written as E[K]E[B]·expm1(ρ)/ρ so that λ → 0 stays finite
    value += batch.mean * eb * _expm1_over(rho) - eb * math.exp(rho)
    value += rho * eb * integrate(lambda w: np.asarray(batch.pgf(w)) * np.exp(rho * w), 0.0, 1.0, rtol=KERNEL_RTOL)
    if np.any(grid.values):
        value += _sojourn_grid_term(params, grid)
    return float(value), _propagated_bounds(params, grid.zeta)[0]


# ─── Mean time to delivery ───────────────────────────────────────────────────

def _delivery_grid_terms(params: SystemParameters, grid: GridFunction) -> float:
    n, rho, loc = grid.n, params.rho, params.location
    eb = params.service.mean
    nodes = grid.nodes
    pi = np.asarray(loc.pdf(nodes))
    tail = np.asarray(loc.tail(nodes))
    weighted = pi[:, None] * grid.values  # Ψ(u)·f_K(z, u), rows z and columns u
    idx = np.arange(n)
    after = idx[:, None] > idx[None, :]
    behind = (idx[:, None] >= 1) & (idx[:, None] <= idx[None, :])
    near = eb * np.exp(rho * tail)
    far = eb * _delivery_far_kernel(rho, tail)
    # the last right endpoint of (u, 1] is the depot itself, where V = 0
    depot = weighted[0, :]
    col_near = np.sum(np.where(after, weighted * near[:, None], 0.0), axis=0) + eb * depot
    col_far = np.sum(np.where(after, weighted * far[:, None], 0.0), axis=0) + eb * math.exp(rho) * depot
    col_behind = np.sum(np.where(behind, weighted * near[:, None], 0.0), axis=0)
    k_tail = np.asarray(params.batch.pgf(tail))
    total = np.sum(k_tail * col_near) + np.sum((1.0 - k_tail) * (col_far + col_behind))
    return float(total) / n ** 2


def exhaustive_mean_delivery(params: SystemParameters, grid: GridFunction) -> Tuple[float, float]:
    """(E[D], bound); the bound reuses ζ with the delivery kernels' factor e^{2ρ}."""
    _check_grid(params, grid)
    rho, alpha, loc = params.rho, params.alpha, params.location
    batch, service = params.batch, params.service
    eb, eb2 = service.mean, service.second_moment
    bps = _breaks(params)

    def psi(u):
        return rho * np.asarray(loc.pdf(u)) + 1.0 - rho

    def tail(u):
        return np.asarray(loc.tail(u))

    def brace_over_rho(v):
        return (v + 1.0) * _expm1_over(rho * (v + 1.0)) - v * np.exp(rho * v)

    d1 = eb * _expm1_over(rho) * integrate(
        lambda u: psi(u) * np.asarray(batch.pgf_prime(tail(u))), 0.0, 1.0, bps, rtol=KERNEL_RTOL
    )
    d2 = eb * integrate(
        lambda u: psi(u) * (batch.mean - np.asarray(batch.pgf_prime(tail(u)))) * brace_over_rho(tail(u)),
        0.0,
        1.0,
        bps,
        rtol=KERNEL_RTOL,
    )
    d3 = alpha / (2.0 * (1.0 - rho)) + alpha / (1.0 - rho) * integrate(
        lambda u: psi(u) * (1.0 - np.asarray(batch.pgf(tail(u)))), 0.0, 1.0, bps, rtol=KERNEL_RTOL
    )
    d4 = (
        rho * eb2 / (2.0 * eb)
        + rho ** 2 * eb2 / (2.0 * (1.0 - rho) * eb)
        + rho * eb2 / ((1.0 - rho) * eb) * batch.mean_ratio
    )
    d5 = -rho * eb2 / eb * integrate(
        lambda w: np.exp(rho * w) * (1.0 - np.asarray(batch.pgf(w))), 0.0, 1.0, rtol=KERNEL_RTOL
    )
    value = d1 + d2 + d3 + d4 + d5
    if np.any(grid.values):
        value += _delivery_grid_terms(params, grid)
    return float(value), _propagated_bounds(params, grid.zeta)[1]


# ─── Consistency checks ──────────────────────────────────────────────────────

def fixed_point_residual(params: SystemParameters, grid: GridFunction) -> np.ndarray:
    """
    Ψ(y)f(x, y) minus the right-hand side of the spread equation at every grid node.

    f_alpha and f_br solve their parts in closed form, so only f_K contributes;
    the arc integrals use the trapezoid rule, not the solver's left sums.
    """
    _check_grid(params, grid)
    n, rho, loc = grid.n, params.rho, params.location
    nodes = grid.nodes
    pi = np.asarray(loc.pdf(nodes))
    wrap, psi_arc = _grid_geometry(params, nodes)
    g = grid.values
    left = _arc_sums(g, wrap)
    before = np.roll(np.arange(n), 1)
    right = left + g - g.T + g[np.arange(n), before][None, :]
    np.fill_diagonal(right, 0.0)
    b = rho * _batch_ratio(params) * pi[None, :] * psi_arc
    residual = g - (rho / n * pi[None, :] * 0.5 * (left + right) + b)
    return pi[:, None] * residual


@dataclass(frozen=True)
class MassBalance:
    value: float
    closed_form: float
    tolerance: float


def mass_balance(params: SystemParameters, grid: GridFunction) -> MassBalance:
    """∬Ψ(u)f(x, u) dx du against its closed form (which equals E[L])."""
    _check_grid(params, grid)
    rho, rate = params.rho, params.customer_rate
    service = params.service
    pi = np.asarray(params.location.pdf(grid.nodes))
    # f_alpha and f_br integrate exactly to these two terms
    analytic = rate * params.alpha / (2.0 * (1.0 - rho)) + rho * rate * service.second_moment / (
        2.0 * service.mean * (1.0 - rho)
    )
    weighted = pi[:, None] * grid.values
    value = analytic + float(weighted.mean())
    closed = rate / (2.0 * (1.0 - rho)) * (
        params.alpha + rate * service.second_moment + service.mean * _batch_ratio(params)
    )
    tolerance = float(pi.max()) * params.location.sup * grid.zeta + 2.0 * float(np.max(weighted)) / grid.n
    return MassBalance(value, closed, tolerance)


def coupling_gap(params: SystemParameters, grid: GridFunction, samples: int = 32):
    """
    |Ψ(y)f_K(x, y)/π(x) − π(y)f_K^U(Π(x), Π(y))| on a ``samples``×``samples`` node subset,
    together with the pointwise bound (1 + ρ)π(y)ρE[K(K−1)]/E[K].
    """
    _check_grid(params, grid)
    rho, loc = params.rho, params.location
    step = max(grid.n // samples, 1)
    ids = np.arange(0, grid.n, step)[:samples]
    x = grid.nodes[ids]
    big_pi = np.asarray(loc.cdf(x))
    pi = np.asarray(loc.pdf(x))
    uniform = rho / (1.0 - rho) * _batch_ratio(params) * np.asarray(distance(big_pi[:, None], big_pi[None, :]))
    gap = np.abs(grid.values[np.ix_(ids, ids)] - pi[None, :] * uniform)
    bound = np.broadcast_to((1.0 + rho) * pi[None, :] * rho * _batch_ratio(params), gap.shape)
    return gap, bound


def dump_grid_csv(grid: GridFunction, path: Union[str, Path]) -> Path:
    """Write i, j, x, y, g, f_k rows for inspection."""
    path = Path(path)
    nodes = grid.nodes
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["i", "j", "x", "y", "g", "f_k"])
        for i in range(grid.n):
            for j in range(grid.n):
                writer.writerow(
                    [i, j, f"{nodes[i]:.9g}", f"{nodes[j]:.9g}", f"{grid.values[i, j]:.9g}", f"{grid.fk[i, j]:.9g}"]
                )
    return path


# ─── One-call analysis ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class ExhaustiveSummary:
    waiting_customers: float
    sojourn: float
    sojourn_bound: float
    delivery: float
    delivery_bound: float
    report: SolverReport
    grid: GridFunction


def analyse_exhaustive(
    params: SystemParameters, n: int = DEFAULT_GRID, delta: float = DEFAULT_DELTA
) -> ExhaustiveSummary:
    grid, report = solve_fk(params, n, delta)
    esb, esb_bound = exhaustive_mean_sojourn(params, grid)
    ed, ed_bound = exhaustive_mean_delivery(params, grid)
    return ExhaustiveSummary(expected_waiting_customers(params), esb, esb_bound, ed, ed_bound, report, grid)
