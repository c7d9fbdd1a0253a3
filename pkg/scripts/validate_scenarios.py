#!/usr/bin/env python3
"""Validate the bundled scenario and sweep JSON files."""

from __future__ import annotations

from pathlib import Path
import re
import sys
from typing import Dict, List

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from services.api.services.errors import PollingError
from services.api.services.scenarios import (
    SCENARIO_DIR,
    _load_json,
    build_parameters,
    load_sweep,
    parse_scenario,
)

SWEEP_SUFFIX = ".sweep.json"


def _is_kebab_case(name: str) -> bool:
    return bool(re.fullmatch(r"[a-z0-9]+(?:-[a-z0-9]+)*", name))


def _collect_json_files(folder: Path) -> List[Path]:
    if not folder.exists():
        return []
    return sorted([p for p in folder.glob("*.json") if p.is_file()])


def _validate_scenario(path: Path) -> List[str]:
    try:
        spec = parse_scenario(_load_json(path), str(path))
        params = build_parameters(spec)
    except PollingError as exc:
        return [f"{exc}" if str(path) in str(exc) else f"{path}: {exc}"]
    errors = []
    if spec.name is not None and spec.name != path.stem:
        errors.append(f"{path}: name '{spec.name}' does not match the file name")
    if not params.rho > 0.0:
        errors.append(f"{path}: scenario has no load (rho = 0)")
    return errors


def _validate_sweep(path: Path) -> List[str]:
    try:
        load_sweep(path)
    except PollingError as exc:
        return [f"{path}: {exc}"]
    return []


def _check_duplicate_names(files: List[Path]) -> List[str]:
    errors: List[str] = []
    seen: Dict[str, Path] = {}
    for path in files:
        try:
            data = _load_json(path)
        except PollingError as exc:
            errors.append(str(exc))
            continue
        name = data.get("name")
        if not isinstance(name, str):
            continue
        if name in seen:
            errors.append(f"duplicate name '{name}' in {seen[name]} and {path}")
        else:
            seen[name] = path
    return errors


def main() -> int:
    errors: List[str] = []

    files = _collect_json_files(SCENARIO_DIR)
    sweeps = [p for p in files if p.name.endswith(SWEEP_SUFFIX)]
    scenarios = [p for p in files if p not in sweeps]

    for path in files:
        stem = path.name[: -len(SWEEP_SUFFIX)] if path in sweeps else path.stem
        if not _is_kebab_case(stem):
            errors.append(f"{path}: file name must be kebab-case")

    errors.extend(_check_duplicate_names(scenarios))
    for path in scenarios:
        errors.extend(_validate_scenario(path))
    for path in sweeps:
        errors.extend(_validate_sweep(path))

    if errors:
        print("Scenario validation failed:\n")
        for err in errors:
            print(f"- {err}")
        return 1

    print("Scenario validation passed.")
    print(f"Scenarios: {len(scenarios)}")
    print(f"Sweep specs: {len(sweeps)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
