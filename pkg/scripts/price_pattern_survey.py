"""Count seeds where each company's priciest/cheapest station is 2/4.

    python scripts/price_pattern_survey.py --seeds 200
"""
import argparse

from fleetcharge.experiments import price_extremes, run_example


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=200)
    args = ap.parse_args()
    for fixed in (True, False):
        hi = lo = 0
        for seed in range(args.seeds):
            r = run_example(seed, fixed_e_pro=fixed).result
            argmax, argmin = price_extremes(r.prices)
            hi += all(j == 1 for j in argmax)
            lo += all(j == 3 for j in argmin)
        label = "fixed e_pro " if fixed else "sampled e_pro"
        print(f"{label}: station 2 priciest {hi}/{args.seeds}, station 4 cheapest {lo}/{args.seeds}")


if __name__ == "__main__":
    main()
