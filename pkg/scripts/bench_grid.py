"""Accuracy grid on the separation benchmark, printed as a table.

    python3 scripts/bench_grid.py --rows 1000 --repeats 20
"""
import argparse

from dimimpute.evaluation import METHODS, run_benchmark
from dimimpute.olapknn import ImputeConfig
from dimimpute.synthetic import generate, separation_config


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--rates", default="1,5,10,20,30,40")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, default=5)
    args = ap.parse_args()
    rates = [float(r) / 100 for r in args.rates.split(",")]
    schema, table = generate(separation_config(args.rows), args.seed)
    recs = run_benchmark(table, schema, rates, METHODS, args.repeats, args.seed, ImputeConfig(k=args.k, seed=args.seed))
    print(f"{'rate':>6} " + " ".join(f"{m:>14}" for m in METHODS))
    for rate in rates:
        row = {r.method: r for r in recs if r.rate == rate}
        cells = [f"{row[m].mean_accuracy:.3f}/{row[m].mean_runtime_s:.2f}s" if row[m].mean_accuracy is not None
                 else "n/a" for m in METHODS]
        print(f"{rate * 100:>5.0f}% " + " ".join(f"{c:>14}" for c in cells))


if __name__ == "__main__":
    main()
