"""Runtime scaling experiment: sweep sizes, write CSV, fit log-log slopes.

Example:
    python3 scripts/run_scaling.py --n-min 10 --n-max 18 --out scaling.csv
"""

import argparse
import csv
import math
import sys
from collections import defaultdict

from softorder.bench import CSV_COLUMNS, SweepConfig, run_sweep


def fit_slope(points):
    # least squares on (log2 n, log2 t); slope ~ 1 means linear scaling
    xs = [math.log2(n) for n, _ in points]
    ys = [math.log2(t) for _, t in points]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = sum((x - mx) ** 2 for x in xs)
    return num / den


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ops", nargs="+", default=["topk", "rank", "sort"])
    parser.add_argument("--n-min", type=int, default=10, help="log2 of smallest size")
    parser.add_argument("--n-max", type=int, default=18, help="log2 of largest size")
    parser.add_argument("--alpha", type=float, default=-1.0)
    parser.add_argument("--k-rule", default="half")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="scaling.csv")
    args = parser.parse_args(argv)

    config = SweepConfig(
        ops=tuple(args.ops),
        n_min=args.n_min,
        n_max=args.n_max,
        k_rule=args.k_rule,
        alpha=args.alpha,
        repeats=args.repeats,
        seed=args.seed,
    )

    rows = []
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for record in run_sweep(config):
            writer.writerow(record.as_row())
            rows.append(record)
            print(
                f"{record.op:>5} n=2^{record.n.bit_length() - 1:<2} "
                f"forward={record.forward_ns / 1e6:8.2f}ms "
                f"forward+backward={record.forward_backward_ns / 1e6:8.2f}ms",
                flush=True,
            )

    by_op = defaultdict(list)
    for record in rows:
        if not record.failed:
            by_op[record.op].append((record.n, record.forward_ns))
    print(f"\nwrote {len(rows)} rows to {args.out}")
    for op, points in by_op.items():
        if len(points) >= 2:
            print(f"{op:>5}: log-log forward slope = {fit_slope(points):.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
