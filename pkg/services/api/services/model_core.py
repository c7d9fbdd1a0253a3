"""
Model primitives for the continuous polling system on the unit circle.

Positions live in [0, 1) and the depot sits at 0. Customers arrive in Poisson
batches; every customer of a batch draws an independent location from the
arrival density π, and a single server travels clockwise at speed 1/α,
stopping to serve.

Everything in this module is immutable after construction:

  LocationDensity           piecewise polynomial π (degree ≤ 3) with exact CDF
  BatchSizeDistribution     finite pmf of the batch size K (support ⊆ {1, 2, …})
  ServiceTimeDistribution   service time B, first two moments and LST
  SystemParameters          λ, α and the three distributions above; ρ < 1
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import stats

from .errors import InvalidConfig, UnstableSystem

logger = logging.getLogger(__name__)

MAX_DEGREE = 3
MASS_TOL = 1e-12
# Raw inputs (hand-written JSON, fitted pdfs) are renormalized when this close to 1.
INPUT_MASS_TOL = 1e-9
SHIFTED_POISSON_TAIL_TOL = 1e-10
_BISECT_STEPS = 64

Segment = Tuple[float, Sequence[float]]


# ─── Small helpers ───────────────────────────────────────────────────────────

def _horner(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate one power-basis polynomial per point; ``rows[k]`` belongs to ``x[k]``."""
    out = rows[..., -1].copy()
    for k in range(rows.shape[-1] - 2, -1, -1):
        out = out * x + rows[..., k]
    return out


def _as_output(values: np.ndarray, like) -> Union[float, np.ndarray]:
    return float(values) if np.ndim(like) == 0 else values


def _real_roots_inside(poly: Polynomial, lo: float, hi: float) -> np.ndarray:
    if poly.degree() < 1 or not np.any(poly.coef[1:]):
        return np.empty(0)
    roots = poly.roots()
    real = roots[np.abs(roots.imag) <= 1e-12].real
    return np.sort(real[(real > lo) & (real < hi)])


def _extrema(poly: Polynomial, lo: float, hi: float) -> Tuple[float, float]:
    points = np.concatenate([[lo, hi], _real_roots_inside(poly.deriv(), lo, hi)])
    values = poly(points)
    return float(values.min()), float(values.max())


def distance(a, b):
    """Clockwise distance from ``a`` to ``b``; zero when the points coincide."""
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    out = np.where(a_arr <= b_arr, b_arr - a_arr, 1.0 - a_arr + b_arr)
    return float(out) if out.ndim == 0 else out


# ─── Location density ────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class LocationDensity:
    """
    Arrival-location density π on [0, 1), piecewise polynomial of degree ≤ 3.

    ``coefficients[k]`` holds the power-basis coefficients (in the global x)
    of the polynomial on ``[breakpoints[k], breakpoints[k + 1])``.
    """

    breakpoints: np.ndarray
    coefficients: np.ndarray
    _antiderivative: np.ndarray = field(init=False, repr=False)
    _anti_left: np.ndarray = field(init=False, repr=False)
    _cum: np.ndarray = field(init=False, repr=False)
    _max: float = field(init=False, repr=False)

    def __post_init__(self):
        breaks = np.asarray(self.breakpoints, dtype=float)
        coefs = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if breaks.ndim != 1 or breaks.size < 2:
            raise InvalidConfig("location density needs at least one segment")
        if breaks[0] != 0.0 or breaks[-1] != 1.0:
            raise InvalidConfig("location breakpoints must start at 0 and end at 1")
        if np.any(np.diff(breaks) <= 0.0):
            raise InvalidConfig("location breakpoints must be strictly increasing")
        if coefs.shape[0] != breaks.size - 1:
            raise InvalidConfig("one coefficient row is required per location segment")
        if coefs.shape[1] > MAX_DEGREE + 1:
            if np.any(coefs[:, MAX_DEGREE + 1:]):
                raise InvalidConfig(f"location segments must have degree <= {MAX_DEGREE}")
            coefs = coefs[:, : MAX_DEGREE + 1]
        padded = np.zeros((coefs.shape[0], MAX_DEGREE + 1))
        padded[:, : coefs.shape[1]] = coefs
        if not np.all(np.isfinite(padded)):
            raise InvalidConfig("location density must be finite on every segment")

        lows, highs = [], []
        for k in range(padded.shape[0]):
            lo, hi = _extrema(Polynomial(padded[k]), breaks[k], breaks[k + 1])
            lows.append(lo)
            highs.append(hi)
        scale = max(1.0, max(highs))
        if min(lows) < -MASS_TOL * scale:
            raise InvalidConfig(f"location density is negative somewhere (min {min(lows):.3g})")

        anti = self._integrate_rows(padded)
        mass = float(np.sum(_horner(anti, breaks[1:]) - _horner(anti, breaks[:-1])))
        if not math.isfinite(mass) or abs(mass - 1.0) > INPUT_MASS_TOL:
            raise InvalidConfig(f"location density integrates to {mass:.12g}, expected 1")
        padded = padded / mass
        anti = self._integrate_rows(padded)
        anti_left = _horner(anti, breaks[:-1])
        increments = _horner(anti, breaks[1:]) - anti_left
        cum = np.concatenate([[0.0], np.cumsum(increments)])

        object.__setattr__(self, "breakpoints", breaks)
        object.__setattr__(self, "coefficients", padded)
        object.__setattr__(self, "_antiderivative", anti)
        object.__setattr__(self, "_anti_left", anti_left)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_max", max(highs) / mass)

    @staticmethod
    def _integrate_rows(coefs: np.ndarray) -> np.ndarray:
        powers = np.arange(1, coefs.shape[1] + 1, dtype=float)
        anti = np.zeros((coefs.shape[0], coefs.shape[1] + 1))
        anti[:, 1:] = coefs / powers
        return anti

    # ── constructors ──

    @classmethod
    def piecewise(cls, segments: Sequence[Segment]) -> "LocationDensity":
        """Build from ``[(start, coefficients), ...]``; the first start must be 0."""
        if not segments:
            raise InvalidConfig("location density needs at least one segment")
        starts = [float(s) for s, _ in segments]
        rows = np.zeros((len(segments), MAX_DEGREE + 1))
        for k, (_, coefs) in enumerate(segments):
            coefs = list(coefs)
            if not coefs or len(coefs) > MAX_DEGREE + 1:
                raise InvalidConfig(f"segment {k} needs 1 to {MAX_DEGREE + 1} coefficients")
            rows[k, : len(coefs)] = coefs
        return cls(np.array(starts + [1.0]), rows)

    @classmethod
    def uniform(cls) -> "LocationDensity":
        return cls.piecewise([(0.0, [1.0])])

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "LocationDensity":
        return cls.piecewise([(0.0, coefficients)])

    @classmethod
    def interval(cls, start: float, end: float) -> "LocationDensity":
        """Uniform on [start, end) ⊆ [0, 1], zero elsewhere."""
        if not 0.0 <= start < end <= 1.0:
            raise InvalidConfig("interval density needs 0 <= start < end <= 1")
        height = 1.0 / (end - start)
        segments = []
        if start > 0.0:
            segments.append((0.0, [0.0]))
        segments.append((start, [height]))
        if end < 1.0:
            segments.append((end, [0.0]))
        return cls.piecewise(segments)

    @classmethod
    def class_based(
        cls,
        demand: Sequence[float],
        space: Sequence[float],
        order: Optional[Sequence[int]] = None,
    ) -> "LocationDensity":
        """
        Storage-class layout: class ``i`` takes ``space[i]`` of the circle and
        receives ``demand[i]`` of the picks. ``order`` lists the classes from the
        depot onwards (default: as given).
        """
        if len(demand) != len(space) or not demand:
            raise InvalidConfig("demand and space must have the same non-zero length")
        if abs(sum(demand) - 1.0) > INPUT_MASS_TOL or abs(sum(space) - 1.0) > INPUT_MASS_TOL:
            raise InvalidConfig("demand and space fractions must each sum to 1")
        if any(s <= 0.0 for s in space) or any(d < 0.0 for d in demand):
            raise InvalidConfig("space fractions must be positive and demand non-negative")
        order = list(range(len(demand))) if order is None else list(order)
        if sorted(order) != list(range(len(demand))):
            raise InvalidConfig("order must be a permutation of the class indices")
        segments, start = [], 0.0
        for i in order:
            segments.append((start, [demand[i] / space[i]]))
            start += space[i]
        return cls.piecewise(segments)

    @classmethod
    def from_pdf(cls, pdf: Callable[[np.ndarray], np.ndarray], pieces: int = 64) -> "LocationDensity":
        """
        Piecewise-cubic approximation of an arbitrary density on [0, 1].

        Each piece interpolates ``pdf`` at four Chebyshev points; a piece whose
        cubic dips below zero falls back to the chord between its end values.
        """
        if pieces < 1:
            raise InvalidConfig("pieces must be >= 1")
        edges = np.linspace(0.0, 1.0, pieces + 1)
        cheb = np.cos((2 * np.arange(4) + 1) * np.pi / 8)
        rows = np.zeros((pieces, MAX_DEGREE + 1))
        fallbacks = 0
        for k in range(pieces):
            lo, hi = edges[k], edges[k + 1]
            xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * cheb
            ys = np.asarray(pdf(xs), dtype=float)
            if not np.all(np.isfinite(ys)):
                raise InvalidConfig(f"pdf is not finite on [{lo:.4g}, {hi:.4g}]")
            poly = Polynomial.fit(xs, ys, MAX_DEGREE).convert()
            if _extrema(poly, lo, hi)[0] < 0.0:
                inner = np.asarray(pdf(np.array([lo, hi]) + np.array([1e-9, -1e-9])), dtype=float)
                y0, y1 = np.maximum(inner, 0.0)
                slope = (y1 - y0) / (hi - lo)
                poly = Polynomial([y0 - slope * lo, slope])
                fallbacks += 1
            rows[k, : poly.coef.size] = poly.coef
        if fallbacks:
            logger.debug("from_pdf: %d of %d pieces fell back to linear chords", fallbacks, pieces)
        anti = cls._integrate_rows(rows)
        mass = float(np.sum(_horner(anti, edges[1:]) - _horner(anti, edges[:-1])))
        if not mass > 0.0:
            raise InvalidConfig("pdf has no mass on [0, 1]")
        return cls(edges, rows / mass)

    @classmethod
    def beta(cls, a: float, b: float, pieces: int = 64) -> "LocationDensity":
        if a <= 0.0 or b <= 0.0:
            raise InvalidConfig("beta parameters must be positive")
        if a < 1.0 or b < 1.0:
            raise InvalidConfig("beta parameters below 1 give an unbounded density")
        return cls.from_pdf(stats.beta(a, b).pdf, pieces)

    def with_floor(self, eps: float) -> "LocationDensity":
        """Mix with the uniform density: (1 − eps)·π + eps."""
        if not 0.0 < eps < 1.0:
            raise InvalidConfig("floor must lie in (0, 1)")
        rows = self.coefficients * (1.0 - eps)
        rows[:, 0] += eps
        return LocationDensity(self.breakpoints.copy(), rows)

    # ── evaluation ──

    @property
    def segment_count(self) -> int:
        return self.coefficients.shape[0]

    @property
    def segments(self):
        return [
            (float(self.breakpoints[k]), tuple(float(c) for c in self.coefficients[k]))
            for k in range(self.segment_count)
        ]

    @property
    def sup(self) -> float:
        return self._max

    @property
    def key(self) -> bytes:
        return self.breakpoints.tobytes() + self.coefficients.tobytes()

    def _index(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, self.segment_count - 1)

    def pdf(self, x):
        xs = np.asarray(x, dtype=float)
        idx = self._index(xs)
        return _as_output(_horner(self.coefficients[idx], xs), x)

    def cdf(self, x):
        xs = np.asarray(x, dtype=float)
        idx = self._index(xs)
        values = self._cum[idx] + _horner(self._antiderivative[idx], xs) - self._anti_left[idx]
        return _as_output(np.clip(values, 0.0, 1.0), x)

    def circular_integral(self, a, b):
        """∫ₐᵇ* π: plain integral when a ≤ b, otherwise wrapped through the depot."""
        fa = np.asarray(self.cdf(a))
        fb = np.asarray(self.cdf(b))
        out = np.where(np.asarray(a) <= np.asarray(b), fb - fa, 1.0 - fa + fb)
        return float(out) if out.ndim == 0 else out

    def tail(self, x):
        """V(x) = ∫ₓ¹ π, the mass still ahead of x before the depot."""
        return _as_output(1.0 - np.asarray(self.cdf(x)), x)

    def sample(self, u):
        """Inverse-CDF draw; bisection runs inside the segment holding ``u``."""
        us = np.asarray(u, dtype=float)
        idx = np.clip(np.searchsorted(self._cum, us, side="right") - 1, 0, self.segment_count - 1)
        lo = self.breakpoints[idx].astype(float)
        hi = self.breakpoints[idx + 1].astype(float)
        rows = self._antiderivative[idx]
        target = us - self._cum[idx] + self._anti_left[idx]
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            below = _horner(rows, mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x = np.minimum(0.5 * (lo + hi), np.nextafter(1.0, 0.0))
        return _as_output(x, u)

    def cell_variation(self, nodes: np.ndarray, width: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        For every cell [node, node + width) (wrapping past 1), return
        sup |π(node) − π(u)| and ∫ |π(node) − π(u)| du, both exact.
        """
        nodes = np.asarray(nodes, dtype=float)
        sups = np.zeros(nodes.size)
        areas = np.zeros(nodes.size)
        left_values = np.asarray(self.pdf(nodes))
        for m, (node, level) in enumerate(zip(nodes, left_values)):
            end = node + width
            pieces = [(node, min(end, 1.0))]
            if end > 1.0:
                pieces.append((0.0, end - 1.0))
            for lo, hi in pieces:
                sup, area = self._deviation(lo, hi, level)
                sups[m] = max(sups[m], sup)
                areas[m] += area
        return sups, areas

    def _deviation(self, lo: float, hi: float, level: float) -> Tuple[float, float]:
        first = int(self._index(np.array(lo)))
        last = int(self._index(np.array(np.nextafter(hi, 0.0))))
        sup, area = 0.0, 0.0
        for k in range(first, last + 1):
            a = max(lo, self.breakpoints[k])
            b = min(hi, self.breakpoints[k + 1])
            if b <= a:
                continue
            diff = Polynomial(self.coefficients[k]) - level
            low, high = _extrema(diff, a, b)
            sup = max(sup, abs(low), abs(high))
            anti = diff.integ()
            cuts = np.concatenate([[a], _real_roots_inside(diff, a, b), [b]])
            area += float(np.sum(np.abs(np.diff(anti(cuts)))))
        return sup, area


# ─── Batch sizes ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class BatchSizeDistribution:
    """pmf of K with ``probabilities[k - 1] = P(K = k)``."""

    probabilities: np.ndarray
    kind: str = "pmf"
    _pgf: Polynomial = field(init=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).ravel()
        if p.size == 0:
            raise InvalidConfig("batch size pmf is empty")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise InvalidConfig("batch size probabilities must be finite and non-negative")
        total = float(p.sum())
        if abs(total - 1.0) > INPUT_MASS_TOL:
            raise InvalidConfig(f"batch size probabilities sum to {total:.12g}, expected 1")
        p = p / total
        nonzero = np.flatnonzero(p)
        p = p[: nonzero[-1] + 1]
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "_pgf", Polynomial(np.concatenate([[0.0], p])))

    @classmethod
    def deterministic(cls, size: int) -> "BatchSizeDistribution":
        if int(size) != size or size < 1:
            raise InvalidConfig("deterministic batch size must be an integer >= 1")
        p = np.zeros(int(size))
        p[-1] = 1.0
        return cls(p, kind="deterministic")

    @classmethod
    def from_pmf(cls, pmf: Union[Mapping[int, float], Sequence[float]]) -> "BatchSizeDistribution":
        """Accept ``{k: p_k}`` (k ≥ 1) or a list ``[p_1, p_2, ...]``."""
        if isinstance(pmf, Mapping):
            sizes = [int(k) for k in pmf]
            if not sizes or min(sizes) < 1:
                raise InvalidConfig("batch sizes must be >= 1")
            p = np.zeros(max(sizes))
            for k, prob in pmf.items():
                p[int(k) - 1] = float(prob)
        else:
            p = np.asarray(list(pmf), dtype=float)
        return cls(p, kind="pmf")

    @classmethod
    def shifted_poisson(cls, mean: float) -> "BatchSizeDistribution":
        """K = 1 + Poisson(mean − 1), truncated at ceil(mean + 12·√mean) and renormalized."""
        if not mean >= 1.0:
            raise InvalidConfig("shifted Poisson mean must be >= 1")
        if mean == 1.0:
            return cls(np.array([1.0]), kind="shifted_poisson")
        k_max = math.ceil(mean + 12.0 * math.sqrt(mean))
        rate = mean - 1.0
        sizes = np.arange(1, k_max + 1)
        p = stats.poisson.pmf(sizes - 1, rate)
        tail = float(stats.poisson.sf(k_max - 1, rate))
        if tail >= SHIFTED_POISSON_TAIL_TOL:
            raise InvalidConfig(f"shifted Poisson truncation drops mass {tail:.3g}")
        return cls(p / p.sum(), kind="shifted_poisson")

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(1, self.probabilities.size + 1, dtype=float)

    @property
    def k_max(self) -> int:
        return int(self.probabilities.size)

    @property
    def mean(self) -> float:
        return float(np.dot(self.sizes, self.probabilities))

    @property
    def second_moment(self) -> float:
        return float(np.dot(self.sizes ** 2, self.probabilities))

    @property
    def factorial_moment(self) -> float:
        """E[K(K − 1)]."""
        k = self.sizes
        return float(np.dot(k * (k - 1.0), self.probabilities))

    @property
    def mean_ratio(self) -> float:
        """E[K/(K + 1)]."""
        k = self.sizes
        return float(np.dot(k / (k + 1.0), self.probabilities))

    @property
    def mean_inverse(self) -> float:
        """E[1/(K + 1)]."""
        return float(np.dot(1.0 / (self.sizes + 1.0), self.probabilities))

    @property
    def is_single(self) -> bool:
        return self.k_max == 1

    def pgf(self, z):
        return _as_output(np.asarray(self._pgf(np.asarray(z, dtype=float))), z)

    def pgf_prime(self, z):
        return _as_output(np.asarray(self._pgf.deriv(1)(np.asarray(z, dtype=float))), z)

    def pgf_second(self, z):
        return _as_output(np.asarray(self._pgf.deriv(2)(np.asarray(z, dtype=float))), z)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        cum = np.cumsum(self.probabilities)
        draws = np.searchsorted(cum, rng.random(size), side="right") + 1
        return np.minimum(draws, self.k_max)


# ─── Service times ───────────────────────────────────────────────────────────

SERVICE_KINDS = ("deterministic", "exponential", "moments")


@dataclass(frozen=True)
class ServiceTimeDistribution:
    """
    Service time B. ``moments`` services carry only E[B] and E[B²]; their LST
    and samples come from the gamma law with those moments (deterministic
    when the variance vanishes).
    """

    kind: str
    mean: float
    second_moment: float

    def __post_init__(self):
        if self.kind not in SERVICE_KINDS:
            raise InvalidConfig(f"unknown service kind '{self.kind}'")
        if not (math.isfinite(self.mean) and self.mean > 0.0):
            raise InvalidConfig("mean service time must be positive")
        if not math.isfinite(self.second_moment):
            raise InvalidConfig("second moment of the service time must be finite")
        if self.second_moment < self.mean ** 2 * (1.0 - 1e-12):
            raise InvalidConfig("E[B^2] must be at least E[B]^2")

    @classmethod
    def deterministic(cls, value: float) -> "ServiceTimeDistribution":
        return cls("deterministic", float(value), float(value) ** 2)

    @classmethod
    def exponential(cls, rate: float) -> "ServiceTimeDistribution":
        if not rate > 0.0:
            raise InvalidConfig("exponential service rate must be positive")
        mean = 1.0 / rate
        return cls("exponential", mean, 2.0 * mean ** 2)

    @classmethod
    def from_moments(cls, mean: float, second_moment: float) -> "ServiceTimeDistribution":
        return cls("moments", float(mean), float(second_moment))

    @property
    def variance(self) -> float:
        return max(self.second_moment - self.mean ** 2, 0.0)

    @property
    def residual_mean(self) -> float:
        """E[B²]/(2E[B])."""
        return self.second_moment / (2.0 * self.mean)

    def _gamma_shape_scale(self) -> Optional[Tuple[float, float]]:
        var = self.variance
        if var <= 1e-14 * self.mean ** 2:
            return None
        return self.mean ** 2 / var, var / self.mean

    def lst(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.kind == "exponential":
            out = 1.0 / (1.0 + w * self.mean)
        else:
            gamma = self._gamma_shape_scale() if self.kind == "moments" else None
            if gamma is None:
                out = np.exp(-w * self.mean)
            else:
                shape, scale = gamma
                out = (1.0 + scale * w) ** (-shape)
        return _as_output(np.asarray(out, dtype=float), omega)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        if self.kind == "exponential":
            return rng.exponential(self.mean, size)
        gamma = self._gamma_shape_scale() if self.kind == "moments" else None
        if gamma is None:
            return np.full(size, self.mean) if size is not None else self.mean
        return rng.gamma(gamma[0], gamma[1], size)


# ─── System parameters ───────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class SystemParameters:
    lam: float
    alpha: float
    batch: BatchSizeDistribution
    service: ServiceTimeDistribution
    location: LocationDensity

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam < 0.0:
            raise InvalidConfig("lambda must be finite and >= 0")
        if not math.isfinite(self.alpha) or self.alpha <= 0.0:
            raise InvalidConfig("alpha must be finite and > 0")
        if self.rho >= 1.0:
            raise UnstableSystem(f"load rho={self.rho:.9g} must be below 1")

    @property
    def rho(self) -> float:
        return self.lam * self.batch.mean * self.service.mean

    @property
    def customer_rate(self) -> float:
        """λE[K]."""
        return self.lam * self.batch.mean

    @property
    def mean_cycle(self) -> float:
        return self.alpha / (1.0 - self.rho)

    @property
    def key(self) -> tuple:
        return (
            self.lam,
            self.alpha,
            self.batch.probabilities.tobytes(),
            self.service.kind,
            self.service.mean,
            self.service.second_moment,
            self.location.key,
        )

    def with_load(self, rho: float) -> "SystemParameters":
        """Same system with λ rescaled to reach load ``rho``."""
        if not 0.0 <= rho < 1.0:
            raise UnstableSystem(f"load rho={rho:.9g} must lie in [0, 1)")
        return replace(self, lam=rho / (self.batch.mean * self.service.mean))

    def with_location(self, location: LocationDensity) -> "SystemParameters":
        return replace(self, location=location)

    def server_density(self, y):
        return server_location_density(self, y)


# ─── Module-level operations ─────────────────────────────────────────────────

def circular_integral(
    density: Union[LocationDensity, float, None],
    a,
    b,
    weight: float = 1.0,
    constant: float = 0.0,
):
    """
    ∫ₐᵇ* of ``weight·π + constant`` (or of a plain constant when ``density`` is a number).

    ``circular_integral(params.location, a, b, rho, 1 - rho)`` integrates the
    server-location density.
    """
    if density is None or isinstance(density, (int, float)):
        level = 0.0 if density is None else float(density)
        out = (weight * level + constant) * np.asarray(distance(a, b))
    else:
        out = weight * np.asarray(density.circular_integral(a, b))
        if constant:
            out = out + constant * np.asarray(distance(a, b))
    return float(out) if np.ndim(out) == 0 else out


def cdf(location: LocationDensity, x):
    return location.cdf(x)


def sample_location(location: LocationDensity, u):
    return location.sample(u)


def server_location_density(params: SystemParameters, y):
    """Stationary density of the server's position: ρπ(y) + 1 − ρ."""
    rho = params.rho
    values = rho * np.asarray(params.location.pdf(y)) + 1.0 - rho
    return float(values) if np.ndim(values) == 0 else values
