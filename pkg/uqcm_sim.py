#!/usr/bin/env python3
"""
UQCM Simulator - command-line entry point

Three-qubit universal quantum cloning machine: gate-level, pulse-level
and noisy simulations, simulated tomography and decoupling sweeps.

Usage:
    python uqcm_sim.py clone --layer ideal
    python uqcm_sim.py process --config config/default.json
    python uqcm_sim.py tomo --shots 10000 --seed 7
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from cli.commands import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
