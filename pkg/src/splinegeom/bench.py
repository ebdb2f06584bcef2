"""Timing of factorized per-unit inference against exhaustive joint-code search."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError
from .network import DenseLayer, lift_layer
from .power import layer_pd, naive_joint_infer_batch, structured_infer

NAIVE_MAX_K = 16


@dataclass
class BenchRow:
    K: int
    R: int
    structured_ns: int
    naive_ns: int
    codes_equal: bool
    ratio: float
    build_ns: int


@dataclass
class BenchReport:
    rows: list[BenchRow]
    trials: int
    repeats: int
    seed: int
    input_dim: int

    def to_dict(self) -> dict:
        return {"trials": self.trials, "repeats": self.repeats, "seed": self.seed,
                "input_dim": self.input_dim, "rows": [asdict(r) for r in self.rows]}

    def ratio(self, K: int) -> float:
        return next(r.ratio for r in self.rows if r.K == K)


def _median_ns(fn, repeats: int) -> tuple[int, object]:
    times, result = [], None
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        result = fn()
        times.append(time.perf_counter_ns() - t0)
    return int(statistics.median(times)), result


def bench_inference(widths: Sequence[int], R: int = 2, trials: int = 1000, seed: int = 0,
                    repeats: int = 5, input_dim: int = 16, act: str = "relu") -> BenchReport:
    """Median wall time of both searches on the same ``trials`` inputs for each width."""
    if R != 2:
        raise CapacityError("benchmark layers are lifted two-piece activations (R=2)")
    for K in widths:
        if K > NAIVE_MAX_K:
            raise CapacityError(f"K={K} exceeds the exhaustive-search cap of {NAIVE_MAX_K} units")
    rng = np.random.default_rng(seed)
    rows = []
    for K in widths:
        layer = lift_layer(DenseLayer(rng.standard_normal((K, input_dim)), rng.standard_normal(K), act))
        X = rng.standard_normal((trials, input_dim))
        build_ns, pd = _median_ns(lambda: layer_pd(layer, max_codes=R ** NAIVE_MAX_K), 1)
        s_ns, fast = _median_ns(lambda: structured_infer(layer, X), repeats)
        n_ns, slow = _median_ns(lambda: naive_joint_infer_batch(layer, X, pd=pd), repeats)
        rows.append(BenchRow(K, R, s_ns, n_ns, bool(np.array_equal(fast, slow)), n_ns / max(s_ns, 1), build_ns))
    return BenchReport(rows, trials, repeats, seed, input_dim)
