"""Case-study pipeline: scenario, equilibrium trace, prices and assignment.

    python scripts/run_example.py --seed 0 --out runs/example --fixed-e-pro
"""
import sys

from fleetcharge.cli import main

if __name__ == "__main__":
    sys.exit(main(["example", *sys.argv[1:]]))
