"""Consistency diagnostics: transform sup-error and the Model 1 sample-size ladder.

    python scripts/run_ladder.py --reps 50 --ns 150,300,600
"""

import argparse
import warnings

import numpy as np

from ssda.evaluation import consistency_ladder, transform_sup_error


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", type=int, default=1)
    parser.add_argument("--ns", default="150,300,600")
    parser.add_argument("--sup-ns", default="200,500,2000")
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--gamma", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    warnings.simplefilter("ignore", RuntimeWarning)

    print("n      median sup |h_hat - h|")
    for n in map(int, args.sup_ns.split(",")):
        errs = [transform_sup_error(np.random.default_rng((args.seed, n, r)).normal(size=n),
                                    args.gamma) for r in range(args.reps)]
        print(f"{n:<6d} {np.median(errs):.4f}")

    ns = tuple(map(int, args.ns.split(",")))
    print(f"\nModel {args.model}: n      exact recovery   median excess error")
    for row in consistency_ladder(args.model, ns, args.reps, args.seed):
        print(f"         {row['n']:<6d} {row['exact_recovery']:<16.2f} "
              f"{row['median_excess_error']:.4f}", flush=True)


if __name__ == "__main__":
    main()
