#!/usr/bin/env python3
"""
Continuous polling analysis from the command line.

Usage:
    python scripts/polling.py gg contrib/scenarios/s0.json
    python scripts/polling.py exhaustive warehouse --grid 256
    python scripts/polling.py sweep small-b.sweep --out small-b.csv

Set POLLING_THREADS to cap the worker threads used by sweeps and replications.
"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from services.api.cli import main


if __name__ == "__main__":
    sys.exit(main())
