"""Power diagrams (Laguerre-Voronoi) induced by units, layers and subdivided cells.

Convention used everywhere: a point ``x`` belongs to the entry minimizing
``||x - mu||^2 - rad``, with ``rad = 2 * (summed offsets) + ||mu||^2``.
Under this convention the Laguerre argmin coincides with the argmax of the
corresponding affine projections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, InputError, StructuralError
from .network import MasoLayer, Network, region_affine

DEFAULT_CAP = 65536


@dataclass(frozen=True, eq=False)
class PowerDiagram:
    centroids: np.ndarray
    radii: np.ndarray
    code_labels: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        mu = np.atleast_2d(np.asarray(self.centroids, dtype=np.float64))
        rad = np.atleast_1d(np.asarray(self.radii, dtype=np.float64))
        if mu.shape[0] != rad.shape[0]:
            raise StructuralError(f"{mu.shape[0]} centroids but {rad.shape[0]} radii")
        if self.code_labels is not None and len(self.code_labels) != rad.shape[0]:
            raise StructuralError("code_labels must have one entry per centroid")
        object.__setattr__(self, "centroids", mu)
        object.__setattr__(self, "radii", rad)

    def __len__(self) -> int:
        return self.radii.shape[0]

    @property
    def space_dim(self) -> int:
        return self.centroids.shape[1]

    def shifted(self, q: float) -> "PowerDiagram":
        return PowerDiagram(self.centroids, self.radii + q, self.code_labels)

    def entry(self, code: Sequence[int]) -> tuple[np.ndarray, float]:
        if self.code_labels is None:
            raise StructuralError("diagram carries no code labels")
        i = self.code_labels.index(tuple(code))
        return self.centroids[i], float(self.radii[i])

    def laguerre(self, X) -> np.ndarray:
        """Laguerre distances ``||x - mu_r||^2 - rad_r``, shape ``(..., n_entries)``."""
        X = np.asarray(X, dtype=np.float64)
        sq = np.sum(X * X, axis=-1)[..., None]
        return sq - 2.0 * X @ self.centroids.T + (np.sum(self.centroids ** 2, axis=-1) - self.radii)


def _check_cap(n: int, cap: int, what: str):
    if n > cap:
        raise CapacityError(f"{what} would enumerate {n} joint codes (R^K), cap is {cap}")


def unit_pd(layer: MasoLayer, k: int) -> PowerDiagram:
    """Diagram of unit ``k`` (1-based): ``mu_r = A[k, r]``, ``rad_r = 2 B[k, r] + ||A[k, r]||^2``."""
    if not 1 <= k <= layer.K:
        raise StructuralError(f"unit index {k} outside 1..{layer.K}")
    mu = layer.A[k - 1]
    rad = 2.0 * layer.B[k - 1] + np.sum(mu ** 2, axis=-1)
    return PowerDiagram(mu.copy(), rad, tuple((r,) for r in range(1, layer.R + 1)))


def _joint_codes(layer: MasoLayer) -> list[tuple[int, ...]]:
    return list(itertools.product(range(1, layer.R + 1), repeat=layer.K))


def _joint_slopes(layer: MasoLayer, codes: list[tuple[int, ...]]) -> tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(codes, dtype=int).reshape(len(codes), layer.K) - 1
    rows = np.arange(layer.K)
    mu = layer.A[rows, idx].sum(axis=1)  # (n, D)
    off = layer.B[rows, idx].sum(axis=1)  # (n,)
    return mu, off


def layer_pd(layer: MasoLayer, max_codes: int = DEFAULT_CAP) -> PowerDiagram:
    """Diagram over all ``R^K`` joint codes of a layer, ordered lexicographically."""
    _check_cap(layer.R ** layer.K, max_codes, "layer_pd")
    codes = _joint_codes(layer)
    mu, off = _joint_slopes(layer, codes)
    return PowerDiagram(mu, 2.0 * off + np.sum(mu ** 2, axis=-1), tuple(codes))


def subdivided_pd(net: Network, prefix: Sequence[Sequence[int]], ell: int, max_codes: int = DEFAULT_CAP) -> PowerDiagram:
    """Diagram of layer ``ell`` pulled back to the input through the cell ``prefix``.

    ``prefix`` holds the codes of layers ``1 .. ell-1``; on that cell the
    earlier layers act as ``x -> A x + b`` and each layer-``ell`` joint code
    ``r`` gets centroid ``A^T mu_r`` and radius
    ``2 (<mu_r, b> + <1, B_r>) + ||A^T mu_r||^2``.
    """
    layer = net.layer(ell)
    if len(prefix) != ell - 1:
        raise StructuralError(f"prefix covers {len(prefix)} layers, layer {ell} needs {ell - 1}")
    _check_cap(layer.R ** layer.K, max_codes, "subdivided_pd")
    aff = region_affine(net, prefix, ell - 1)
    codes = _joint_codes(layer)
    mu, off = _joint_slopes(layer, codes)
    return _pull_back(aff.A, aff.b, mu, off, tuple(codes))


def _pull_back(A, b, mu, off, labels=None) -> PowerDiagram:
    mu_in = mu @ A
    rad = 2.0 * (mu @ b + off) + np.sum(mu_in ** 2, axis=-1)
    return PowerDiagram(mu_in, rad, labels)


def cell_centroid_radius(layer: MasoLayer, code: Sequence[int], A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Single subdivided-diagram entry for one layer code, given the prefix map ``(A, b)``."""
    mu, off = _joint_slopes(layer, [tuple(code)])
    pd = _pull_back(A, b, mu, off)
    return pd.centroids[0], float(pd.radii[0])


def laguerre_infer(pd: PowerDiagram, x) -> int:
    """0-based index of the Laguerre-nearest entry; ties go to the smallest index."""
    if len(pd) == 0:
        raise StructuralError("empty power diagram")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (pd.space_dim,):
        raise InputError(f"point of shape {x.shape} for diagram in dimension {pd.space_dim}")
    return int(np.argmin(pd.laguerre(x)))


def laguerre_infer_batch(pd: PowerDiagram, X) -> np.ndarray:
    return np.argmin(pd.laguerre(np.atleast_2d(X)), axis=-1)


def structured_infer(layer: MasoLayer, X) -> np.ndarray:
    """Per-unit argmax codes, 1-based, shape ``(N, K)``: the factorized search."""
    return np.argmax(layer.projections(np.atleast_2d(X)), axis=-1) + 1


def naive_joint_infer(layer: MasoLayer, x, cap: int = DEFAULT_CAP, pd: PowerDiagram | None = None) -> tuple[int, ...]:
    """Exhaustive Laguerre argmin over every joint code of the layer."""
    if pd is None:
        pd = layer_pd(layer, cap)
    return pd.code_labels[laguerre_infer(pd, x)]


def naive_joint_infer_batch(layer: MasoLayer, X, cap: int = DEFAULT_CAP, pd: PowerDiagram | None = None) -> np.ndarray:
    """Batched exhaustive search, returning ``(N, K)`` 1-based codes."""
    if pd is None:
        pd = layer_pd(layer, cap)
    labels = np.asarray(pd.code_labels, dtype=int)
    X = np.atleast_2d(X)
    step = max(1, (1 << 22) // len(pd))
    idx = np.concatenate([laguerre_infer_batch(pd, X[i:i + step]) for i in range(0, len(X), step)])
    return labels[idx]
