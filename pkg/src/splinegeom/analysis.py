"""Jacobian-based centroid recovery, layer margins and dataset statistics."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from .arrangement import Partition
from .errors import InputError, StructuralError, UnsupportedError
from .network import Network, _check_point, forward, region_code, select_pieces

FD_EPS = 1e-6
FD_STEP = 1e-6
N_BINS = 50


class ConditioningWarning(UserWarning):
    """Query point too close to a region boundary for derivative-based results."""


def input_margin(net: Network, x, up_to: int) -> float:
    """Input-space distance from ``x`` to the nearest switching line of layers ``1 .. up_to``, within x's region."""
    x = _check_point(net, x)
    codes = region_code(net, x)
    A = np.eye(net.input_dim)
    b = np.zeros(net.input_dim)
    best = np.inf
    for layer, code in zip(net.layers[:up_to], codes):
        if layer.R == 2:
            da, db = layer.piece_difference()
            alpha = da @ A
            beta = da @ b + db
            norms = np.linalg.norm(alpha, axis=1)
            ok = norms > 1e-12
            if ok.any():
                best = min(best, float(np.min(np.abs(alpha[ok] @ x + beta[ok]) / norms[ok])))
        S, c = select_pieces(layer, code)
        A, b = S @ A, S @ b + c
    return best


def _jacobians(net: Network, codes, ell: int) -> list[np.ndarray]:
    """Input Jacobians of ``z^(0) .. z^(ell)`` by reverse accumulation of code-selected slopes."""
    slopes = [select_pieces(layer, code)[0] for layer, code in zip(net.layers[:ell], codes)]
    out = []
    for depth in range(ell + 1):
        J = np.eye(slopes[depth - 1].shape[0]) if depth else np.eye(net.input_dim)
        for S in reversed(slopes[:depth]):
            J = J @ S
        out.append(J)
    return out


def input_jacobian(net: Network, x, ell: int) -> np.ndarray:
    """Jacobian of ``z^(ell)`` with respect to the input at ``x``."""
    if not 0 <= ell <= len(net):
        raise StructuralError(f"layer {ell} outside 0..{len(net)}")
    x = _check_point(net, x)
    if ell and input_margin(net, x, ell) <= FD_EPS:
        warnings.warn(f"point lies within {FD_EPS} of a region boundary", ConditioningWarning, stacklevel=2)
    return _jacobians(net, region_code(net, x), ell)[ell]


def finite_difference_jacobian(net: Network, x, ell: int, step: float = FD_STEP) -> np.ndarray:
    x = _check_point(net, x)
    cols = []
    for i in range(net.input_dim):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((forward(net, x + e)[ell - 1] - forward(net, x - e)[ell - 1]) / (2 * step))
    return np.stack(cols, axis=1)


def region_centroid_radius(net: Network, x, ell: int) -> tuple[np.ndarray, float]:
    """Power-diagram centroid and radius of x's depth-``ell`` region, from Jacobians.

    The centroid is the column sum of the depth-``ell`` Jacobian (the sum of
    per-unit input gradients); the radius follows from the layer outputs as
    ``2 (sum_k z_k - <mu, x>) + ||mu||^2``.
    """
    if not 1 <= ell <= len(net):
        raise StructuralError(f"layer {ell} outside 1..{len(net)}")
    x = _check_point(net, x)
    if input_margin(net, x, ell) <= FD_EPS:
        warnings.warn(f"point lies within {FD_EPS} of a region boundary", ConditioningWarning, stacklevel=2)
    J = _jacobians(net, region_code(net, x), ell)[ell]
    mu = J.sum(axis=0)
    z = forward(net, x)[ell - 1]
    return mu, float(2.0 * (z.sum() - mu @ x) + mu @ mu)


@dataclass
class MarginReport:
    layer: int
    min_distance: float
    arg_unit: int | None
    distances: list[float]
    degenerate_units: list[int]

    def to_dict(self) -> dict:
        return asdict(self)


def layer_margin(net: Network, x, ell: int) -> MarginReport:
    """Distance from ``z^(ell-1)(x)`` to the nearest switching hyperplane of layer ``ell``."""
    layer = net.layer(ell)
    if layer.R != 2:
        raise UnsupportedError(f"layer {ell} has R={layer.R}; margins need two pieces")
    x = _check_point(net, x)
    z = x if ell == 1 else forward(net, x)[ell - 2]
    da, db = layer.piece_difference()
    norms = np.linalg.norm(da, axis=1)
    ok = norms >= 1e-12
    dist = np.full(layer.K, np.inf)
    dist[ok] = np.abs(da[ok] @ z + db[ok]) / norms[ok]
    k = int(np.argmin(dist)) if ok.any() else None
    return MarginReport(
        ell,
        float(dist[k]) if k is not None else float("inf"),
        k + 1 if k is not None else None,
        dist.tolist(),
        [int(i) + 1 for i in np.flatnonzero(~ok)],
    )


def exact_margin_2d(partition: Partition, x) -> float:
    return partition.exact_margin(x)


@dataclass
class OccupancyReport:
    depth: int
    n_points: int
    distinct_codes: int
    max_per_code: int
    histogram: list[int]
    size_histogram: dict[int, int]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["size_histogram"] = {str(k): v for k, v in self.size_histogram.items()}
        return d


def _check_dataset(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise InputError("dataset must be a non-empty 2D array")
    if X.shape[1] != net.input_dim:
        raise InputError(f"dataset has {X.shape[1]} columns, network expects {net.input_dim}")
    return _check_point(net, X)


def code_occupancy(net: Network, X, depth: int | None = None) -> OccupancyReport:
    """How many dataset points share each region (codes through ``depth``)."""
    X = _check_dataset(net, X)
    depth = len(net) if depth is None else depth
    if not 0 <= depth <= len(net):
        raise StructuralError(f"depth {depth} outside 0..{len(net)}")
    keys = Counter()
    z = X
    parts = [np.zeros((len(X), 0), dtype=int)]
    for layer in net.layers[:depth]:
        proj = layer.projections(z)
        parts.append(np.argmax(proj, axis=-1))
        z = proj.max(axis=-1)
    codes = np.concatenate(parts, axis=1)
    for row in codes:
        keys[row.tobytes()] += 1
    counts = sorted(keys.values(), reverse=True)
    return OccupancyReport(depth, len(X), len(counts), counts[0], counts, dict(sorted(Counter(counts).items())))


def distance_distribution(net: Network, X, ell: int, bins: int = N_BINS) -> dict:
    """Per-point layer margins summarized on a log10 scale."""
    X = _check_dataset(net, X)
    m = np.array([layer_margin(net, x, ell).min_distance for x in X])
    zero = m == 0
    inf = np.isinf(m)
    finite = np.log10(m[~zero & ~inf])
    if len(finite):
        counts, edges = np.histogram(finite, bins=bins)
        q = np.quantile(finite, [0.0, 0.25, 0.5, 0.75, 1.0])
    else:
        counts, edges, q = np.zeros(bins, dtype=int), np.zeros(bins + 1), np.full(5, np.nan)
    return {
        "layer": ell,
        "n_points": int(len(X)),
        "neg_inf_count": int(zero.sum()),
        "pos_inf_count": int(inf.sum()),
        "min": _num(q[0]),
        "quartiles": [_num(v) for v in q[1:4]],
        "max": _num(q[4]),
        "bin_edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
        "margins": [_num(v) for v in m],
    }


def _num(v: float):
    return None if not np.isfinite(v) else float(v)
