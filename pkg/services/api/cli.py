"""
Command-line front end.

    polling gg <scenario>
    polling exhaustive <scenario> [--grid N] [--delta D] [--dump-grid PATH]
    polling simulate <scenario> --policy P [--seed S] [--replications R] ...
    polling limits <scenario> --regime {light,heavy}
    polling sweep <sweep.json> [--out results.csv]
    polling validate <scenario> [--rho R ...]
    polling compare <scenario>
    polling storage <scenario>
    polling batch-size <scenario> --sizes 1,2,5,10

Results go to stdout as ``key=value`` lines (CSV for ``sweep``); floats carry
9 significant digits. Failures print ``error: <kind>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .models.schemas import ScenarioSpec
from .services.errors import InvalidConfig, PollingError
from .services.exhaustive_analysis import (
    DEFAULT_DELTA,
    DEFAULT_GRID,
    ExhaustiveSummary,
    analyse_exhaustive,
    dump_grid_csv,
    mass_balance,
)
from .services.gg_analysis import cycle_moments, gg_mean_delivery, gg_mean_sojourn
from .services.limits import EXHAUSTIVE, GLOBALLY_GATED, POLICIES, REGIMES, exhaustive_limits, gg_limits
from .services.model_core import (
    BatchSizeDistribution,
    ServiceTimeDistribution,
    SystemParameters,
)
from .services.scenarios import build_parameters, load_scenario, load_scenario_spec, load_sweep
from .services.settings import log_level, worker_count
from .services.simulator import SimulationConfig, estimate_map, simulate

logger = logging.getLogger(__name__)

CSV_HEADER = ("rho", "policy", "metric", "value", "bound", "sim_mean", "sim_ci")
CONFIG_KINDS = ("invalid_config", "unstable_system")
MAX_STORAGE_CLASSES = 5

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def _emit(pairs: Iterable[Tuple[str, object]], out=None) -> None:
    out = out or sys.stdout
    for key, value in pairs:
        print(f"{key}={fmt(value)}", file=out)


class _Parser(argparse.ArgumentParser):
    """argparse with the same machine-readable error line as the rest of the CLI."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"error: invalid_config: {message}\n")


# ─── Analysis helpers ────────────────────────────────────────────────────────

def analytic_means(
    params: SystemParameters, policy: str, grid: int = DEFAULT_GRID, delta: float = DEFAULT_DELTA
) -> Dict[str, Tuple[Optional[float], Optional[float]]]:
    """metric -> (value, certified bound); closed forms carry a zero bound."""
    if policy == GLOBALLY_GATED:
        return {
            "sojourn": (gg_mean_sojourn(params), 0.0),
            "delivery": (gg_mean_delivery(params), 0.0),
            "waiting_customers": (None, None),
        }
    return exhaustive_means(analyse_exhaustive(params, grid, delta))


def exhaustive_means(summary: ExhaustiveSummary) -> Dict[str, Tuple[Optional[float], Optional[float]]]:
    return {
        "sojourn": (summary.sojourn, summary.sojourn_bound),
        "delivery": (summary.delivery, summary.delivery_bound),
        "waiting_customers": (summary.waiting_customers, 0.0),
    }


def _relative(a: float, b: float) -> float:
    return (a - b) / b if b else math.nan


def _solver_pairs(summary: ExhaustiveSummary) -> List[Tuple[str, object]]:
    report = summary.report
    return [
        ("f_k_zero", not bool(np.any(summary.grid.fk))),
        ("iterations", report.iterations),
        ("achieved_delta", report.achieved_delta),
        ("contraction_ratio", report.contraction_ratio),
        ("regularity_margin", report.regularity_margin),
        ("shift_applied", report.shift_applied),
        ("error_bound_g", report.error_bound_g),
        ("error_bound_fk", report.error_bound_fk),
    ]


# ─── Subcommands ─────────────────────────────────────────────────────────────

def cmd_gg(args) -> int:
    params = load_scenario(args.scenario)
    stats = cycle_moments(params)
    _emit(
        [
            ("rho", params.rho),
            ("esb", gg_mean_sojourn(params)),
            ("ed", gg_mean_delivery(params)),
            ("cycle_mean", stats.mean_c),
            ("cycle_second_moment", stats.second_moment_c),
            ("cycle_variance", stats.variance_c),
            ("mean_residual", stats.mean_residual),
            ("mean_length_biased", stats.mean_length_biased),
        ]
    )
    return EXIT_OK


def cmd_exhaustive(args) -> int:
    params = load_scenario(args.scenario)
    summary = analyse_exhaustive(params, args.grid, args.delta)
    _emit(
        [
            ("rho", params.rho),
            ("waiting_customers", summary.waiting_customers),
            ("esb", summary.sojourn),
            ("esb_bound", summary.sojourn_bound),
            ("ed", summary.delivery),
            ("ed_bound", summary.delivery_bound),
        ]
        + _solver_pairs(summary)
    )
    if args.dump_grid:
        dump_grid_csv(summary.grid, args.dump_grid)
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = load_scenario(args.scenario)
    config = SimulationConfig(
        params,
        args.policy,
        measured_batches=args.measured_batches,
        replications=args.replications,
        seed=args.seed,
        warmup_batches=args.warmup,
    )
    estimates = simulate(config, trace_path=args.trace)
    pairs: List[Tuple[str, object]] = [("rho", params.rho), ("policy", args.policy), ("warmup_batches", config.warmup)]
    for e in estimates:
        pairs += [(e.metric, e.mean), (f"{e.metric}_ci", e.ci_half_width)]
    _emit(pairs)
    return EXIT_OK


def cmd_limits(args) -> int:
    params = load_scenario(args.scenario)
    gg = gg_limits(params, args.regime)
    ex = exhaustive_limits(params, args.regime)
    _emit(
        [
            ("regime", args.regime),
            ("scaling", gg.scaling),
            ("gg_sojourn", gg.sojourn_limit),
            ("gg_delivery", gg.delivery_limit),
            ("exhaustive_sojourn", ex.sojourn_limit),
            ("exhaustive_delivery", ex.delivery_limit),
            ("gap_sojourn", gg.policy_gap_sojourn),
            ("gap_delivery", gg.policy_gap_delivery),
        ]
    )
    return EXIT_OK


def _parallel(func, items: Sequence) -> list:
    """Map ``func`` over ``items`` on POLLING_THREADS workers, keeping input order."""
    workers = min(worker_count(), max(len(items), 1))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _sweep_rows(point, params: SystemParameters, sweep, grid: int, delta: float, simulate_too: bool):
    rho, policy = point
    loaded = params.with_load(rho)
    analytic = analytic_means(loaded, policy, grid, delta)
    estimates = {}
    if simulate_too:
        config = SimulationConfig(
            loaded,
            policy,
            measured_batches=sweep.measured_batches,
            replications=sweep.replications,
            seed=sweep.seed,
        )
        estimates = estimate_map(simulate(config))
    rows = []
    for metric in sweep.outputs:
        value, bound = analytic[metric]
        est = estimates.get(metric)
        rows.append(
            (
                fmt(rho),
                policy,
                metric,
                fmt(value),
                fmt(bound),
                fmt(est.mean if est else None),
                fmt(est.ci_half_width if est else None),
            )
        )
    return rows


def cmd_sweep(args) -> int:
    sweep, params = load_sweep(args.spec)
    if args.seed is not None:
        sweep = sweep.model_copy(update={"seed": args.seed})
    if args.replications is not None:
        sweep = sweep.model_copy(update={"replications": args.replications})
    grid = args.grid or sweep.grid or DEFAULT_GRID
    delta = args.delta or sweep.delta or DEFAULT_DELTA
    simulate_too = sweep.simulate or args.simulate
    points = [(rho, policy) for rho in sweep.values for policy in POLICIES if policy in sweep.policies]
    logger.info("sweep: %d points, grid=%d, simulate=%s", len(points), grid, simulate_too)
    blocks = _parallel(lambda p: _sweep_rows(p, params, sweep, grid, delta, simulate_too), points)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rows in blocks:
        writer.writerows(rows)
    if args.out:
        Path(args.out).write_text(buffer.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buffer.getvalue())
    return EXIT_OK


def _check_line(rho, policy, metric, value, bound, est) -> Tuple[bool, str]:
    tolerance = max(3.0 * est.ci_half_width, bound or 0.0)
    passed = abs(value - est.mean) <= tolerance
    fields = [
        ("rho", rho),
        ("policy", policy),
        ("metric", metric),
        ("analytic", value),
        ("sim_mean", est.mean),
        ("sim_ci", est.ci_half_width),
        ("tolerance", tolerance),
        ("status", "pass" if passed else "fail"),
    ]
    return passed, " ".join(f"{k}={fmt(v)}" for k, v in fields)


def _validate_point(params: SystemParameters, args) -> List[Tuple[bool, str]]:
    lines = []
    rho = params.rho
    for policy in POLICIES:
        config = SimulationConfig(
            params,
            policy,
            measured_batches=args.measured_batches,
            replications=args.replications,
            seed=args.seed,
        )
        estimates = estimate_map(simulate(config))
        summary = None
        if policy == EXHAUSTIVE:
            summary = analyse_exhaustive(params, args.grid, args.delta)
            analytic = exhaustive_means(summary)
        else:
            analytic = analytic_means(params, policy)
            stats = cycle_moments(params)
            analytic["cycle_mean"] = (stats.mean_c, 0.0)
            analytic["cycle_second_moment"] = (stats.second_moment_c, 0.0)
        for metric, (value, bound) in analytic.items():
            if value is None:
                continue
            lines.append(_check_line(rho, policy, metric, value, bound, estimates[metric]))
        if summary is not None and not params.batch.is_single:
            balance = mass_balance(params, summary.grid)
            passed = abs(balance.value - balance.closed_form) <= balance.tolerance
            fields = [
                ("rho", rho),
                ("policy", policy),
                ("metric", "mass_balance"),
                ("analytic", balance.closed_form),
                ("grid", balance.value),
                ("tolerance", balance.tolerance),
                ("status", "pass" if passed else "fail"),
            ]
            lines.append((passed, " ".join(f"{k}={fmt(v)}" for k, v in fields)))
    return lines


def cmd_validate(args) -> int:
    params = load_scenario(args.scenario)
    points = [params.with_load(r) for r in args.rho] if args.rho else [params]
    results = [line for point in points for line in _validate_point(point, args)]
    for _, line in results:
        print(line)
    ok = all(passed for passed, _ in results)
    print(f"result={'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _policy_pairs(params: SystemParameters, grid: int, delta: float) -> List[Tuple[str, object]]:
    gg = analytic_means(params, GLOBALLY_GATED, grid, delta)
    ex = analytic_means(params, EXHAUSTIVE, grid, delta)
    return [
        ("gg_esb", gg["sojourn"][0]),
        ("gg_ed", gg["delivery"][0]),
        ("exhaustive_esb", ex["sojourn"][0]),
        ("exhaustive_esb_bound", ex["sojourn"][1]),
        ("exhaustive_ed", ex["delivery"][0]),
        ("exhaustive_ed_bound", ex["delivery"][1]),
        ("esb_relative_difference", _relative(gg["sojourn"][0], ex["sojourn"][0])),
        ("ed_relative_difference", _relative(gg["delivery"][0], ex["delivery"][0])),
    ]


def cmd_compare(args) -> int:
    params = load_scenario(args.scenario)
    _emit([("rho", params.rho)] + _policy_pairs(params, args.grid, args.delta))
    return EXIT_OK


def storage_layouts(spec: ScenarioSpec) -> List[Tuple[str, ScenarioSpec]]:
    """Random storage (uniform density) plus every ordering of the storage classes."""
    location = spec.location
    if location.kind != "class_based":
        raise InvalidConfig("storage comparison needs a class_based location")
    names = [c.name for c in location.classes]
    if len(names) > MAX_STORAGE_CLASSES:
        raise InvalidConfig(f"storage comparison supports at most {MAX_STORAGE_CLASSES} classes")
    layouts = [("random", spec.model_copy(update={"location": location.model_copy(update={"kind": "uniform"})}))]
    for order in itertools.permutations(names):
        layout = location.model_copy(update={"order": list(order)})
        layouts.append((">".join(order), spec.model_copy(update={"location": layout})))
    return layouts


def cmd_storage(args) -> int:
    spec = load_scenario_spec(args.scenario)
    layouts = storage_layouts(spec)

    def evaluate(item):
        name, layout_spec = item
        params = build_parameters(layout_spec)
        return [("layout", name)] + _policy_pairs(params, args.grid, args.delta)

    for pairs in _parallel(evaluate, layouts):
        print(" ".join(f"{k}={fmt(v)}" for k, v in pairs))
    return EXIT_OK


def _parse_sizes(raw: str) -> List[int]:
    try:
        sizes = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise InvalidConfig(f"--sizes must be a comma-separated list of integers, got '{raw}'") from None
    if not sizes or any(k < 1 for k in sizes):
        raise InvalidConfig("--sizes needs at least one batch size >= 1")
    return sizes


def batch_size_parameters(base: SystemParameters, size: int, rho: float) -> SystemParameters:
    """K ≡ size with the same total work per batch, spread over deterministic services."""
    work = base.batch.mean * base.service.mean
    params = SystemParameters(
        lam=0.0,
        alpha=base.alpha,
        batch=BatchSizeDistribution.deterministic(size),
        service=ServiceTimeDistribution.deterministic(work / size),
        location=base.location,
    )
    return params.with_load(rho)


def cmd_batch_size(args) -> int:
    base = load_scenario(args.scenario)
    rho = args.rho if args.rho is not None else base.rho
    sizes = _parse_sizes(args.sizes)

    def evaluate(size):
        params = batch_size_parameters(base, size, rho)
        return [("batch_size", size), ("rho", rho)] + _policy_pairs(params, args.grid, args.delta)

    for pairs in _parallel(evaluate, sizes):
        print(" ".join(f"{k}={fmt(v)}" for k, v in pairs))
    return EXIT_OK


# ─── Parser ──────────────────────────────────────────────────────────────────

def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", type=int, default=DEFAULT_GRID, help="grid nodes per axis")
    parser.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="fixed-point stopping tolerance")


def _add_simulation_flags(parser: argparse.ArgumentParser, batches: int) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replications", type=int, default=5)
    parser.add_argument("--measured-batches", type=int, default=batches)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polling", description="Continuous polling on a circle: analysis and simulation.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gg", help="globally gated closed forms")
    p.add_argument("scenario")
    p.set_defaults(handler=cmd_gg)

    p = sub.add_parser("exhaustive", help="exhaustive means with certified bounds")
    p.add_argument("scenario")
    _add_solver_flags(p)
    p.add_argument("--dump-grid", default=None, help="write the solved grid as CSV")
    p.set_defaults(handler=cmd_exhaustive)

    p = sub.add_parser("simulate", help="discrete-event simulation")
    p.add_argument("scenario")
    p.add_argument("--policy", choices=POLICIES, required=True)
    _add_simulation_flags(p, 100_000)
    p.add_argument("--warmup", type=int, default=None, help="warm-up batches per replication")
    p.add_argument("--trace", default=None, help="write the first replication's events as CSV")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("limits", help="light- and heavy-traffic limits")
    p.add_argument("scenario")
    p.add_argument("--regime", choices=REGIMES, required=True)
    p.set_defaults(handler=cmd_limits)

    p = sub.add_parser("sweep", help="rho sweep to CSV")
    p.add_argument("spec")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--simulate", action="store_true", help="add simulation columns")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("validate", help="analytic means against simulation")
    p.add_argument("scenario")
    p.add_argument("--rho", type=float, action="append", default=None, help="repeatable")
    _add_solver_flags(p)
    _add_simulation_flags(p, 100_000)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("compare", help="both policies side by side")
    p.add_argument("scenario")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("storage", help="class-based storage layouts under both policies")
    p.add_argument("scenario")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_storage)

    p = sub.add_parser("batch-size", help="split the same work per batch over K customers")
    p.add_argument("scenario")
    p.add_argument("--sizes", default="1,2,5,10")
    p.add_argument("--rho", type=float, default=None)
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_batch_size)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=log_level(args.verbose),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except PollingError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_CONFIG if exc.kind in CONFIG_KINDS else EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: io_error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
