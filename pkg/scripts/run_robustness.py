"""Noisy-demand sweep over alpha in {0, 0.2, ..., 1.0}, 100 samples each.

    python scripts/run_robustness.py --seed 0 --out runs/robustness --fixed-e-pro
"""
import sys

from fleetcharge.cli import main

if __name__ == "__main__":
    sys.exit(main(["robustness", *sys.argv[1:]]))
