"""Wall time of the full pipeline against missing rate on a large synthetic table."""
import argparse
import time

from dimimpute.evaluation import inject_missing
from dimimpute.olapknn import ImputeConfig, h_olapknn
from dimimpute.synthetic import generate, separation_config


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=10_000)
    ap.add_argument("--rates", default="10,20,30,40")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    schema, truth = generate(separation_config(args.rows), 11)
    attrs = [a for a in schema.names if a != schema.id_attribute]
    base = None
    for pct in (float(r) for r in args.rates.split(",")):
        masked, mask = inject_missing(truth, {a: pct / 100 for a in attrs}, 12)
        t0 = time.perf_counter()
        rep = h_olapknn(masked, schema, ImputeConfig(threads=args.threads))
        dt = time.perf_counter() - t0
        base = base or dt / pct
        print(f"{pct:>4.0f}%  {len(mask):>7} cells  {dt:7.2f}s  time/linear={dt / (base * pct):.2f}"
              f"  left missing={rep.remaining_missing}")


if __name__ == "__main__":
    main()
