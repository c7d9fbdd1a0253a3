"""
Discrete-event simulation of the continuous polling system.

The server travels clockwise at speed 1/α and stops for every service. Under
the globally-gated rule a snapshot of the waiting customers is taken at each
depot crossing and only that snapshot is served during the next cycle. Under
the exhaustive rule the next stop is always the nearest waiting customer
ahead; an arrival during travel re-plans the pending leg. A customer exactly
at the server's position counts as ahead by 0 and is served at once.

Each replication draws from its own Philox stream spawned from one
SeedSequence, so (config, seed) reproduces every estimate bit for bit.
"""

from __future__ import annotations

import bisect
import csv
import heapq
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .errors import InvalidConfig
from .model_core import SystemParameters
from .settings import worker_count

logger = logging.getLogger(__name__)

POLICIES = ("globally_gated", "exhaustive")
METRICS = (
    "sojourn",
    "delivery",
    "waiting_customers",
    "cycle_mean",
    "cycle_second_moment",
    "busy_fraction",
)
PROBE_METRICS = ("cycle", "delivery", "sojourn")
MIN_MEASURED = 1000
MIN_REPLICATIONS = 3
CONFIDENCE = 0.95
TRACE_ROW_CAP = 1_000_000
_BLOCK = 4096

_ARRIVAL, _REACH, _DONE, _DEPOT = "arrival", "reach", "done", "depot"


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    params: SystemParameters
    policy: str
    measured_batches: int = 100_000
    replications: int = 5
    seed: int = 0
    warmup_batches: Optional[int] = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise InvalidConfig(f"policy must be one of {POLICIES}, got '{self.policy}'")
        if self.measured_batches < MIN_MEASURED:
            raise InvalidConfig(f"measured_batches must be >= {MIN_MEASURED}")
        if self.replications < MIN_REPLICATIONS:
            raise InvalidConfig(f"replications must be >= {MIN_REPLICATIONS}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if self.warmup_batches is not None and self.warmup_batches < 0:
            raise InvalidConfig("warmup_batches must be >= 0")
        if self.params.lam <= 0.0:
            raise InvalidConfig("simulation needs a positive arrival rate")

    @property
    def warmup(self) -> int:
        """Default: ten mean cycles' worth of batches."""
        if self.warmup_batches is not None:
            return self.warmup_batches
        return int(math.ceil(10.0 * self.params.mean_cycle * self.params.lam))


@dataclass(frozen=True)
class SimulationEstimate:
    metric: str
    mean: float
    ci_half_width: float
    replications: int
    total_batches: int


@dataclass(frozen=True, eq=False)
class ReplicationResult:
    sojourns: np.ndarray
    deliveries: np.ndarray
    cycles: np.ndarray
    waiting_area: float
    busy_time: float
    window: float
    gate_violations: int


class _Draws:
    """Block-buffered random inputs for one replication."""

    def __init__(self, params: SystemParameters, rng: np.random.Generator):
        self._params = params
        self._rng = rng
        self._gaps = np.empty(0)
        self._sizes = np.empty(0, dtype=int)
        self._positions = np.empty(0)
        self._services = np.empty(0)

    def gap(self) -> float:
        if not self._gaps.size:
            self._gaps = self._rng.exponential(1.0 / self._params.lam, _BLOCK)
        value, self._gaps = self._gaps[0], self._gaps[1:]
        return float(value)

    def batch(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self._sizes.size:
            self._sizes = np.asarray(self._params.batch.sample(self._rng, _BLOCK), dtype=int)
        k, self._sizes = int(self._sizes[0]), self._sizes[1:]
        while self._positions.size < k:
            u = self._rng.random(_BLOCK)
            self._positions = np.concatenate([self._positions, self._params.location.sample(u)])
            self._services = np.concatenate(
                [self._services, np.asarray(self._params.service.sample(self._rng, _BLOCK), dtype=float)]
            )
        positions, self._positions = self._positions[:k], self._positions[k:]
        services, self._services = self._services[:k], self._services[k:]
        return positions, services


class _Replication:
    def __init__(
        self,
        config: SimulationConfig,
        seed: np.random.SeedSequence,
        trace: Optional[List[tuple]] = None,
    ):
        self.params = config.params
        self.alpha = config.params.alpha
        self.gated = config.policy == "globally_gated"
        self.first = config.warmup
        self.last = config.warmup + config.measured_batches  # exclusive
        self.draws = _Draws(config.params, np.random.Generator(np.random.Philox(seed)))
        self.trace = trace

        self.heap: List[tuple] = []
        self.counter = itertools.count()
        self.now = 0.0
        self.position = 0.0
        self.leg_start = (0.0, 0.0)
        self.serving = False
        self.version = 0
        self.target: Optional[Tuple[float, int]] = None
        self.cycle = 0

        self.waiting: List[Tuple[float, int]] = []  # sorted (position, customer id)
        self.pool: List[Tuple[float, int]] = []  # next gate, globally gated only
        self.customers = {}  # id -> (batch id, service time, gate)
        self.next_customer = 0
        self.batches = {}  # id -> [arrival time, remaining]
        self.awaiting_delivery: List[int] = []
        self.arrived = 0

        self.waiting_count = 0
        self.area = 0.0
        self.busy = 0.0
        self.last_time = 0.0
        self.window_open: Optional[Tuple[float, float, float]] = None
        self.window_close: Optional[Tuple[float, float, float]] = None
        self.crossings: List[float] = []
        self.sojourns: List[float] = []
        self.deliveries: List[float] = []
        self.delivered = 0
        self.gate_violations = 0

    # ── bookkeeping ──

    def _push(self, time: float, kind: str, version: int = -1) -> None:
        heapq.heappush(self.heap, (time, next(self.counter), kind, version))

    def _advance(self, time: float) -> None:
        dt = time - self.last_time
        self.area += self.waiting_count * dt
        if self.serving:
            self.busy += dt
        self.last_time = time
        self.now = time

    def _record(self, kind: str, batch_id: int = -1) -> None:
        if self.trace is not None and len(self.trace) < TRACE_ROW_CAP:
            self.trace.append((self.now, kind, self.position, batch_id))

    def _measured(self, batch_id: int) -> bool:
        return self.first <= batch_id < self.last

    # ── server planning ──

    def _plan(self) -> None:
        self.version += 1
        self.leg_start = (self.now, self.position)
        idx = bisect.bisect_left(self.waiting, (self.position, -1))
        if idx < len(self.waiting):
            self.target = self.waiting[idx]
            self._push(self.now + self.alpha * (self.target[0] - self.position), _REACH, self.version)
        else:
            self.target = None
            self._push(self.now + self.alpha * (1.0 - self.position), _DEPOT, self.version)

    def _current_position(self) -> float:
        start_time, start_pos = self.leg_start
        return min(start_pos + (self.now - start_time) / self.alpha, 1.0)

    # ── events ──

    def _on_arrival(self) -> None:
        batch_id = self.arrived
        self.arrived += 1
        if batch_id == self.first:
            self.window_open = (self.now, self.area, self.busy)
        if batch_id == self.last:
            self.window_close = (self.now, self.area, self.busy)
        positions, services = self.draws.batch()
        self.batches[batch_id] = [self.now, len(positions)]
        if not self.serving:
            self.position = self._current_position()
        gate = self.cycle + 1
        for pos, service in zip(positions, services):
            cid = self.next_customer
            self.next_customer += 1
            self.customers[cid] = (batch_id, float(service), gate)
            entry = (float(pos), cid)
            if self.gated:
                self.pool.append(entry)
            else:
                bisect.insort(self.waiting, entry)
        self.waiting_count += len(positions)
        self._record(_ARRIVAL, batch_id)
        if not self.gated and not self.serving:
            self._plan()
        self._push(self.now + self.draws.gap(), _ARRIVAL)

    def _on_reach(self) -> None:
        entry = self.target
        self.position = entry[0]
        self.waiting.remove(entry)
        self.waiting_count -= 1
        batch_id, service, gate = self.customers[entry[1]]
        if self.gated and gate != self.cycle:
            self.gate_violations += 1
            logger.warning("customer %d served outside its gate (cycle %d)", entry[1], self.cycle)
        self.serving = True
        self.version += 1
        self._record(_REACH, batch_id)
        self._push(self.now + service, _DONE, self.version)

    def _on_done(self) -> None:
        entry = self.target
        batch_id = self.customers.pop(entry[1])[0]
        self.serving = False
        self._record(_DONE, batch_id)
        record = self.batches[batch_id]
        record[1] -= 1
        if record[1] == 0:
            if self._measured(batch_id):
                self.sojourns.append(self.now - record[0])
            self.awaiting_delivery.append(batch_id)
        self._plan()

    def _on_depot(self) -> None:
        self.position = 0.0
        self.crossings.append(self.now)
        self._record(_DEPOT)
        for batch_id in self.awaiting_delivery:
            arrival = self.batches.pop(batch_id)[0]
            if self._measured(batch_id):
                self.deliveries.append(self.now - arrival)
                self.delivered += 1
        self.awaiting_delivery = []
        self.cycle += 1
        if self.gated:
            if self.waiting:
                self.gate_violations += len(self.waiting)
                logger.warning("%d gated customers left unserved at a depot crossing", len(self.waiting))
            self.waiting = sorted(self.pool + self.waiting)
            self.pool = []
        self._plan()

    def run(self) -> ReplicationResult:
        self._push(self.draws.gap(), _ARRIVAL)
        self._plan()
        measured = self.last - self.first
        while self.delivered < measured or self.window_close is None:
            time, _, kind, version = heapq.heappop(self.heap)
            if kind != _ARRIVAL and version != self.version:
                continue
            self._advance(time)
            if kind == _ARRIVAL:
                self._on_arrival()
            elif kind == _REACH:
                self._on_reach()
            elif kind == _DONE:
                self._on_done()
            else:
                self._on_depot()

        t0, area0, busy0 = self.window_open
        t1, area1, busy1 = self.window_close
        crossings = np.asarray(self.crossings)
        inside = crossings[(crossings >= t0) & (crossings <= t1)]
        return ReplicationResult(
            sojourns=np.asarray(self.sojourns),
            deliveries=np.asarray(self.deliveries),
            cycles=np.diff(inside),
            waiting_area=area1 - area0,
            busy_time=busy1 - busy0,
            window=t1 - t0,
            gate_violations=self.gate_violations,
        )


def _t_interval(values: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    spread = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    if spread == 0.0:
        return mean, 0.0
    quantile = stats.t.ppf(0.5 + CONFIDENCE / 2.0, arr.size - 1)
    return mean, float(quantile * spread / math.sqrt(arr.size))


def run_replications(
    config: SimulationConfig, trace_path: Optional[Union[str, Path]] = None
) -> List[ReplicationResult]:
    """Run every replication; the optional trace covers the first one."""
    seeds = np.random.SeedSequence(config.seed).spawn(config.replications)
    trace: Optional[List[tuple]] = [] if trace_path is not None else None

    def one(index: int) -> ReplicationResult:
        return _Replication(config, seeds[index], trace if index == 0 else None).run()

    workers = min(worker_count(), config.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(config.replications)))
    else:
        results = [one(i) for i in range(config.replications)]

    violations = sum(r.gate_violations for r in results)
    logger.info(
        "simulated %s: %d replications x %d batches (gate violations: %d)",
        config.policy,
        config.replications,
        config.measured_batches,
        violations,
    )
    if trace is not None:
        write_trace(trace, trace_path)
    return results


def write_trace(rows: Sequence[tuple], path: Union[str, Path]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["time", "event", "position", "batch_id"])
        for time, kind, position, batch_id in rows[:TRACE_ROW_CAP]:
            writer.writerow([f"{time:.9g}", kind, f"{position:.9g}", batch_id if batch_id >= 0 else ""])
    return path


def estimates_from(config: SimulationConfig, results: Sequence[ReplicationResult]) -> List[SimulationEstimate]:
    per_metric = {
        "sojourn": [float(r.sojourns.mean()) for r in results],
        "delivery": [float(r.deliveries.mean()) for r in results],
        "waiting_customers": [r.waiting_area / r.window for r in results],
        "cycle_mean": [float(r.cycles.mean()) if r.cycles.size else math.nan for r in results],
        "cycle_second_moment": [float(np.mean(r.cycles ** 2)) if r.cycles.size else math.nan for r in results],
        "busy_fraction": [r.busy_time / r.window for r in results],
    }
    total = config.measured_batches * len(results)
    estimates = []
    for metric in METRICS:
        mean, half = _t_interval(per_metric[metric])
        estimates.append(SimulationEstimate(metric, mean, half, len(results), total))
    return estimates


def simulate(
    config: SimulationConfig, trace_path: Optional[Union[str, Path]] = None
) -> List[SimulationEstimate]:
    return estimates_from(config, run_replications(config, trace_path))


def probe_from(
    config: SimulationConfig, results: Sequence[ReplicationResult], metric: str, omega: float
) -> SimulationEstimate:
    if metric not in PROBE_METRICS:
        raise InvalidConfig(f"metric must be one of {PROBE_METRICS}, got '{metric}'")
    if not omega >= 0.0:
        raise InvalidConfig("omega must be >= 0")
    field_name = {"cycle": "cycles", "delivery": "deliveries", "sojourn": "sojourns"}[metric]
    means = [float(np.mean(np.exp(-omega * getattr(r, field_name)))) for r in results]
    mean, half = _t_interval(means)
    return SimulationEstimate(f"lst_{metric}", mean, half, len(results), config.measured_batches * len(results))


def lst_probe(config: SimulationConfig, metric: str, omega: float) -> SimulationEstimate:
    """Empirical E[exp(−ω·X)] for X a cycle length, time to delivery or batch sojourn time."""
    if metric not in PROBE_METRICS:
        raise InvalidConfig(f"metric must be one of {PROBE_METRICS}, got '{metric}'")
    if not omega >= 0.0:
        raise InvalidConfig("omega must be >= 0")
    return probe_from(config, run_replications(config), metric, omega)


def estimate_map(estimates: Sequence[SimulationEstimate]) -> dict:
    return {e.metric: e for e in estimates}
