#!/usr/bin/env python3
"""
Command line entry point for the unit root toolkit

Usage:
    python3 unitroot.py test --input data/random_walk_T200.csv --methods bic,svd-star
    python3 unitroot.py montecarlo --rhos 1.0 --Ts 500 --methods bic --reps 2000
    python3 unitroot.py empirical --format markdown
"""

import os
import sys

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from cli import main  # noqa: E402

if __name__ == '__main__':
    sys.exit(main())
