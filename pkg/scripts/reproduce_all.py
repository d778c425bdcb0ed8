"""Regenerate every figure's CSV data at desk or full ("paper") scale.

    python3 scripts/reproduce_all.py --scale desk --out results/desk
"""
import argparse
import logging
import time

from risknet.experiments import FIGURES, reproduce


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", default="desk", choices=("desk", "paper"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--figures", nargs="*", default=list(FIGURES), choices=FIGURES)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    for fig in args.figures:
        t0 = time.perf_counter()
        manifest = reproduce(fig, args.scale, args.seed, args.out, workers=args.threads)
        print(f"{fig}: {time.perf_counter() - t0:7.2f}s  {manifest}")


if __name__ == "__main__":
    main()
