"""Shared fixtures: 20 score files (half text, half binary) plus a runner
that produces reference outputs through the primary CLI demo."""

import csv

import numpy as np
import pytest

from softorder.bench import main as bench_main
from softorder.bench import write_scores_binary

SIZES = (1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 16, 20, 24, 28, 32, 40, 48, 56, 64, 96)


def _scores_for(rng, index, n):
    scores = rng.standard_normal(n) * float(10.0 ** rng.uniform(-2.0, 2.0))
    if index == 5:
        scores = np.round(scores, 0)  # heavy ties
    if index == 11:
        scores = scores * 1e6  # wide spread
    if index == 17 and n >= 2:
        scores[::2] *= 1e-6  # mixed magnitudes
    return scores


@pytest.fixture(scope="session")
def fixture_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    rng = np.random.default_rng(8675309)
    files = []
    for index, n in enumerate(SIZES):
        scores = _scores_for(rng, index, n)
        if index % 2 == 0:
            path = root / f"scores_{index:02d}.txt"
            path.write_text("".join(repr(float(x)) + "\n" for x in scores))
        else:
            path = root / f"scores_{index:02d}.bin"
            write_scores_binary(path, scores)
        files.append(path)
    return files


@pytest.fixture(scope="session")
def reference_runner(tmp_path_factory):
    out_root = tmp_path_factory.mktemp("reference")
    counter = iter(range(100_000))

    def run(path, op, alpha, k=None):
        out = out_root / f"ref_{next(counter):05d}.csv"
        argv = [
            "demo",
            "--op",
            op,
            "--input",
            str(path),
            f"--alpha={alpha!r}",
            "--out",
            str(out),
        ]
        if k is not None:
            argv.append(f"--k={k!r}")
        assert bench_main(argv) == 0
        with open(out, newline="") as fh:
            rows = [[float(cell) for cell in row] for row in csv.reader(fh) if row]
        arr = np.array(rows, dtype=np.float64)
        return arr if op == "perm" else arr[:, 0]

    return run
