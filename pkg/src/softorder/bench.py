"""Benchmark and demo CLI for the soft order operations.

Two subcommands:

``sweep``
    Times forward and forward+backward passes over a power-of-two grid of
    problem sizes and streams one CSV row per (op, n) cell. Timings are the
    median of ``--repeats`` runs after one untimed warmup (monotonic
    nanosecond clock); peak memory is allocator-level live bytes from
    tracemalloc around a single forward+backward pass; scores are standard
    normal draws from a per-cell generator derived from the configured seed,
    so two runs with the same seed produce identical inputs and fidelity
    numbers.

``demo``
    Runs one op on scores read from a file (text: one decimal per line;
    binary: ``LPS1`` magic, little-endian u64 count, that many little-endian
    f64 values) and writes the result as CSV. Floats are written with repr
    precision so parsing the file recovers them bit for bit.

The ``error_k`` column reports a per-op fidelity residual: |sum(probs) - k|
for topk, |sum(ranks) - n(n-1)/2| for rank, the worst round-trip residual of
the sorted values through the forward CDF sum for sort, and the worst
row/column-sum deviation from 1 for perm. Cells that exhaust memory emit a
row with failed=1 and keep the sweep going. The permutation op requires a
positive scale, so perm cells run at |alpha| and record the scale actually
used.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import struct
import sys
import time
import tracemalloc
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .core import KOutOfRange, SoftOrderError, cdf_sum
from .grad import perm_vjp, rank_grad_product, sort_vjp, topk_vjp
from .ops import soft_permutation, soft_rank, soft_sort, soft_topk

__all__ = [
    "CSV_COLUMNS",
    "BenchRecord",
    "SweepConfig",
    "run_sweep",
    "read_scores",
    "write_scores_binary",
    "demo",
    "main",
]

CSV_COLUMNS = (
    "op",
    "n",
    "k",
    "alpha",
    "forward_ns",
    "forward_backward_ns",
    "peak_bytes",
    "error_k",
    "repeats",
    "seed",
    "failed",
)

OPS = ("topk", "rank", "sort", "perm")

_MAGIC = b"LPS1"


@dataclass(frozen=True)
class BenchRecord:
    """One benchmark cell; fields mirror the CSV schema exactly."""

    op: str
    n: int
    k: float
    alpha: float
    forward_ns: int
    forward_backward_ns: int
    peak_bytes: int
    error_k: float | None
    repeats: int
    seed: int
    failed: int

    def as_row(self) -> list:
        return [
            self.op,
            self.n,
            repr(self.k),
            repr(self.alpha),
            self.forward_ns,
            self.forward_backward_ns,
            self.peak_bytes,
            "" if self.error_k is None else repr(self.error_k),
            self.repeats,
            self.seed,
            self.failed,
        ]


@dataclass(frozen=True)
class SweepConfig:
    """Sweep parameters; ``n_min``/``n_max`` are log2 of the size grid."""

    ops: tuple[str, ...]
    n_min: int
    n_max: int
    k_rule: str
    alpha: float
    repeats: int
    seed: int
    threads: int | None = None

    def __post_init__(self) -> None:
        for op in self.ops:
            if op not in OPS:
                raise SoftOrderError(f"unknown op {op!r}; choose from {OPS}")
        if self.n_min < 1 or self.n_max < self.n_min:
            raise SoftOrderError("need 1 <= n-min <= n-max (log2 exponents)")
        if self.repeats < 1:
            raise SoftOrderError("repeats must be at least 1")
        if self.alpha == 0.0:
            raise SoftOrderError("alpha must be nonzero")
        self.k_for(4)  # validate the k-rule shape early

    def k_for(self, n: int) -> float:
        if self.k_rule == "half":
            return n / 2.0
        if self.k_rule.startswith("fixed:"):
            try:
                return float(self.k_rule.split(":", 1)[1])
            except ValueError:
                pass
        raise SoftOrderError(
            f"k-rule must be 'half' or 'fixed:<value>', got {self.k_rule!r}"
        )


def _median_ns(fn: Callable[[], object], repeats: int) -> int:
    fn()  # warmup: JIT, caches, page faults
    samples = []
    for _ in range(repeats):
        start = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - start)
    return int(statistics.median(samples))


def _available_bytes() -> int | None:
    try:
        with open("/proc/meminfo") as fh:
            for line in fh:
                if line.startswith("MemAvailable:"):
                    return int(line.split()[1]) * 1024
    except OSError:
        pass
    return None


def _guard_memory(op: str, n: int) -> None:
    # The dense permutation needs ~6 n^2 doubles transiently; refuse early
    # instead of letting the OOM killer take the whole sweep down.
    if op != "perm":
        return
    needed = 6 * 8 * n * n
    available = _available_bytes()
    if available is not None and needed > 0.8 * available:
        raise MemoryError(
            f"perm at n={n} needs ~{needed} bytes, {available} available"
        )


def _cell(
    op: str, n: int, k: float, alpha: float, repeats: int, seed: int
) -> BenchRecord:
    rng = np.random.default_rng([seed, OPS.index(op), n])
    scores = rng.standard_normal(n)
    used_alpha = abs(alpha) if op == "perm" else alpha

    if op == "topk":
        cotangent = rng.standard_normal(n)

        def forward():
            return soft_topk(scores, k, used_alpha)

        def backward(state):
            return topk_vjp(state, cotangent)

        def fidelity(state):
            return abs(float(state.probs.sum()) - k)

    elif op == "rank":
        cotangent = rng.standard_normal(n)

        def forward():
            return soft_rank(scores, used_alpha)

        def backward(state):
            return rank_grad_product(state, cotangent)

        def fidelity(state):
            return abs(float(state.ranks.sum()) - n * (n - 1) / 2.0)

    elif op == "sort":
        cotangent = rng.standard_normal(n)

        def forward():
            return soft_sort(scores, used_alpha)

        def backward(state):
            return sort_vjp(state, cotangent)

        def fidelity(state):
            levels = np.arange(n, dtype=np.float64) + 0.5
            return float(
                np.max(np.abs(cdf_sum(state.prepared, state.values) - levels))
            )

    else:  # perm
        _guard_memory(op, n)
        cotangent = rng.standard_normal((n, n))

        def forward():
            return soft_permutation(scores, used_alpha)

        def backward(state):
            return perm_vjp(state, cotangent)

        def fidelity(state):
            rows = np.max(np.abs(state.entries.sum(axis=1) - 1.0))
            cols = np.max(np.abs(state.entries.sum(axis=0) - 1.0))
            return float(max(rows, cols))

    forward_ns = _median_ns(forward, repeats)
    state = forward()

    def forward_backward():
        backward(forward())

    forward_backward_ns = _median_ns(forward_backward, repeats)

    tracemalloc.start()
    forward_backward()
    _, peak_bytes = tracemalloc.get_traced_memory()
    tracemalloc.stop()

    return BenchRecord(
        op=op,
        n=n,
        k=k,
        alpha=used_alpha,
        forward_ns=forward_ns,
        forward_backward_ns=forward_backward_ns,
        peak_bytes=int(peak_bytes),
        error_k=fidelity(state),
        repeats=repeats,
        seed=seed,
        failed=0,
    )


def run_sweep(config: SweepConfig) -> Iterator[BenchRecord]:
    """Yield one record per (op, n) cell; memory exhaustion yields failed=1."""
    if config.threads is not None:
        import numba

        try:
            numba.set_num_threads(config.threads)
        except ValueError as exc:
            print(f"warning: --threads ignored: {exc}", file=sys.stderr)
    for exponent in range(config.n_min, config.n_max + 1):
        n = 1 << exponent
        k = config.k_for(n)
        for op in config.ops:
            try:
                yield _cell(op, n, k, config.alpha, config.repeats, config.seed)
            except (MemoryError, KOutOfRange) as exc:
                print(f"warning: {op} at n={n} failed: {exc}", file=sys.stderr)
                yield BenchRecord(
                    op=op,
                    n=n,
                    k=k,
                    alpha=abs(config.alpha) if op == "perm" else config.alpha,
                    forward_ns=0,
                    forward_backward_ns=0,
                    peak_bytes=0,
                    error_k=None,
                    repeats=config.repeats,
                    seed=config.seed,
                    failed=1,
                )


def read_scores(path: str | Path) -> np.ndarray:
    """Read scores from a text (one decimal per line) or LPS1 binary file."""
    data = Path(path).read_bytes()
    if data[:4] == _MAGIC:
        if len(data) < 12:
            raise SoftOrderError(f"{path}: truncated binary header")
        (count,) = struct.unpack_from("<Q", data, 4)
        if len(data) != 12 + 8 * count:
            raise SoftOrderError(
                f"{path}: binary payload holds {(len(data) - 12) // 8} values, "
                f"header promises {count}"
            )
        return np.frombuffer(data, dtype="<f8", offset=12).astype(np.float64)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SoftOrderError(f"{path}: not UTF-8 text and not LPS1 binary") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            values.append(float(stripped))
        except ValueError as exc:
            raise SoftOrderError(
                f"{path}:{lineno}: not a decimal value: {stripped!r}"
            ) from exc
    if not values:
        raise SoftOrderError(f"{path}: no scores found")
    return np.array(values, dtype=np.float64)


def write_scores_binary(path: str | Path, values) -> None:
    """Write scores in the LPS1 binary layout (magic, u64 count, f64 data)."""
    arr = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", arr.size))
        fh.write(arr.tobytes())


def demo(
    op: str,
    input_path: str | Path,
    out_path: str | Path,
    k: float | None,
    alpha: float,
) -> None:
    """Run one op on a score file and write the result as repr-precision CSV."""
    if op not in OPS:
        raise SoftOrderError(f"unknown op {op!r}; choose from {OPS}")
    scores = read_scores(input_path)
    if op == "topk":
        if k is None:
            raise SoftOrderError("topk needs --k")
        result = soft_topk(scores, k, alpha).probs
    elif op == "rank":
        result = soft_rank(scores, alpha).ranks
    elif op == "sort":
        result = soft_sort(scores, alpha).values
    else:
        result = soft_permutation(scores, alpha).entries
    rows = result if result.ndim == 2 else result[:, None]
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow([repr(float(x)) for x in row])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench", description="Benchmark and demo the soft order operations."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="time ops over a power-of-two size grid")
    sweep.add_argument(
        "--ops", default="topk,rank,sort,perm", help="comma-separated op names"
    )
    sweep.add_argument(
        "--n-min", type=int, required=True, help="log2 of the smallest size"
    )
    sweep.add_argument(
        "--n-max", type=int, required=True, help="log2 of the largest size"
    )
    sweep.add_argument(
        "--k-rule", default="half", help="'half' (k = n/2) or 'fixed:<value>'"
    )
    sweep.add_argument("--alpha", type=float, default=-1.0)
    sweep.add_argument("--repeats", type=int, default=5)
    sweep.add_argument("--seed", type=int, default=42)
    sweep.add_argument("--out", required=True, help="CSV output path")
    sweep.add_argument(
        "--threads", type=int, default=None, help="cap the kernel thread pool"
    )

    demo_p = sub.add_parser("demo", help="run one op on a score file")
    demo_p.add_argument("--op", required=True, choices=OPS)
    demo_p.add_argument("--input", required=True, help="text or LPS1 binary scores")
    demo_p.add_argument("--k", type=float, default=None)
    demo_p.add_argument("--alpha", type=float, default=-1.0)
    demo_p.add_argument("--out", required=True, help="CSV output path")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            config = SweepConfig(
                ops=tuple(s.strip() for s in args.ops.split(",") if s.strip()),
                n_min=args.n_min,
                n_max=args.n_max,
                k_rule=args.k_rule,
                alpha=args.alpha,
                repeats=args.repeats,
                seed=args.seed,
                threads=args.threads,
            )
            with open(args.out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_COLUMNS)
                for record in run_sweep(config):
                    writer.writerow(record.as_row())
                    fh.flush()
        else:
            demo(args.op, args.input, args.out, args.k, args.alpha)
    except (SoftOrderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
