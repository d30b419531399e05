"""Reproduce the simulation tables: every model x series, all methods.

Writes ``<out>/model<k><series>/records.csv`` and ``summary.txt`` for each run
and prints the summary tables.

    python scripts/run_tables.py --reps 100 --jobs 4 --out results/tables
"""

import argparse
import json
import warnings
from pathlib import Path

from ssda.evaluation import METHODS, run_benchmark
from ssda.simulate import make_spec


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--models", default="1,2,3,4")
    parser.add_argument("--series", default="a,b")
    parser.add_argument("--reps", type=int, default=100)
    parser.add_argument("--test-size", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default="results/tables")
    args = parser.parse_args()
    warnings.simplefilter("ignore", RuntimeWarning)
    for model in map(int, args.models.split(",")):
        for series in args.series.split(","):
            spec = make_spec(model, series)
            report = run_benchmark(spec, METHODS, args.reps, args.test_size, args.seed,
                                   n_jobs=args.jobs)
            out = Path(args.out) / f"model{model}{series}"
            out.mkdir(parents=True, exist_ok=True)
            report.to_csv(out / "records.csv")
            table = report.summary_table()
            (out / "summary.txt").write_text(table + "\n")
            (out / "config.json").write_text(json.dumps(report.config, indent=2) + "\n")
            print(f"\n== Model {model}{series} ==\n{table}", flush=True)


if __name__ == "__main__":
    main()
