"""Piecewise-affine networks written as compositions of max-affine spline operators.

A dense layer ``z = act(W x + b)`` with a two-piece convex activation is
lifted to slopes ``A`` (K x R x D) and offsets ``B`` (K x R) so that
``z_k = max_r <A[k, r], x> + B[k, r]``.  Piece ``r = 1`` is always the
identity piece ``(W_k, b_k)``; piece ``r = 2`` is the scaled piece.

Region codes are 1-based throughout the public API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, StructuralError

ACTIVATIONS = ("identity", "relu", "leaky_relu", "abs")
WEIGHT_STYLES = ("dense_gaussian", "axis_aligned", "diagonal_signs", "orthogonal")

LayerCodes = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Activation:
    kind: str = "relu"
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise StructuralError(f"unknown activation {self.kind!r}")
        if self.kind == "leaky_relu":
            if self.eta is None or not (0.0 < self.eta < 1.0):
                raise StructuralError(f"leaky_relu eta must lie in (0, 1), got {self.eta!r}")
        elif self.eta is not None:
            raise StructuralError(f"eta is only meaningful for leaky_relu, not {self.kind}")

    @property
    def n_pieces(self) -> int:
        return 1 if self.kind == "identity" else 2

    def scale(self) -> float:
        """Multiplier of the second affine piece relative to the first."""
        return {"relu": 0.0, "abs": -1.0, "leaky_relu": self.eta}[self.kind]


@dataclass(frozen=True, eq=False)
class DenseLayer:
    W: np.ndarray
    b: np.ndarray
    act: Activation = field(default_factory=Activation)

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64, ndmin=2)
        b = np.array(self.b, dtype=np.float64, ndmin=1)
        if W.ndim != 2:
            raise StructuralError(f"W must be a matrix, got shape {W.shape}")
        if b.shape != (W.shape[0],):
            raise StructuralError(f"b has shape {b.shape}, expected ({W.shape[0]},)")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise StructuralError("layer parameters must be finite")
        if isinstance(self.act, str):
            object.__setattr__(self, "act", Activation(self.act))
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True, eq=False)
class MasoLayer:
    """Slopes ``A`` (K, R, D) and offsets ``B`` (K, R) of one layer.

    ``source`` keeps the dense description a layer was lifted from, which
    is what the JSON format serializes.
    """

    A: np.ndarray
    B: np.ndarray
    source: DenseLayer | None = None

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        B = np.array(self.B, dtype=np.float64)
        if A.ndim != 3 or B.shape != A.shape[:2]:
            raise StructuralError(f"inconsistent MASO shapes A{A.shape} B{B.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise StructuralError("MASO parameters must be finite")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def K(self) -> int:
        return self.A.shape[0]

    @property
    def R(self) -> int:
        return self.A.shape[1]

    @property
    def in_dim(self) -> int:
        return self.A.shape[2]

    def projections(self, z: np.ndarray) -> np.ndarray:
        """Affine projections ``<A[k, r], z> + B[k, r]``; batched over leading axes."""
        return np.einsum("krd,...d->...kr", self.A, z) + self.B

    def piece_difference(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A[:, 0] - A[:, 1], B[:, 0] - B[:, 1])`` for two-piece layers."""
        if self.R != 2:
            raise StructuralError(f"piece difference needs R=2, layer has R={self.R}")
        return self.A[:, 0] - self.A[:, 1], self.B[:, 0] - self.B[:, 1]


def lift_layer(dense: DenseLayer) -> MasoLayer:
    W, b = dense.W, dense.b
    if dense.act.kind == "identity":
        return MasoLayer(W[:, None, :], b[:, None], source=dense)
    c = dense.act.scale()
    A = np.stack([W, c * W], axis=1)
    B = np.stack([b, c * b], axis=1)
    return MasoLayer(A, B, source=dense)


@dataclass(frozen=True, eq=False)
class AffineMap:
    A: np.ndarray
    b: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.A.T + self.b

    def then(self, A: np.ndarray, b: np.ndarray) -> "AffineMap":
        """Compose ``x -> A (self(x)) + b``."""
        return AffineMap(A @ self.A, A @ self.b + b)

    @classmethod
    def identity(cls, dim: int) -> "AffineMap":
        return cls(np.eye(dim), np.zeros(dim))


class Network:
    """Ordered stack of MASO layers acting on ``input_dim``-dimensional inputs."""

    def __init__(self, layers: Sequence[MasoLayer | DenseLayer], input_dim: int | None = None, meta=None):
        lifted = tuple(lift_layer(l) if isinstance(l, DenseLayer) else l for l in layers)
        if not lifted:
            raise StructuralError("a network needs at least one layer")
        if input_dim is None:
            input_dim = lifted[0].in_dim
        prev = input_dim
        for i, layer in enumerate(lifted):
            if layer.in_dim != prev:
                raise StructuralError(
                    f"layers[{i}] expects input dimension {layer.in_dim}, previous layer gives {prev}"
                )
            prev = layer.K
        self.layers = lifted
        self.input_dim = int(input_dim)
        self.meta = dict(meta or {})

    def __len__(self) -> int:
        return len(self.layers)

    def __repr__(self) -> str:
        return f"Network(dims={self.dims})"

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.input_dim,) + tuple(l.K for l in self.layers)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].K

    def layer(self, ell: int) -> MasoLayer:
        """Layer by 1-based index."""
        if not 1 <= ell <= len(self.layers):
            raise StructuralError(f"layer index {ell} outside 1..{len(self.layers)}")
        return self.layers[ell - 1]

    def activation(self, ell: int) -> Activation | None:
        src = self.layer(ell).source
        return src.act if src is not None else None

    def is_scalar_output(self) -> bool:
        last = self.layers[-1]
        return last.K == 1 and last.R == 1


def _check_point(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (net.input_dim,):
        raise InputError(f"point has dimension {x.shape[-1:]}, network expects {net.input_dim}")
    if not np.all(np.isfinite(x)):
        raise InputError("point must be finite")
    return x


def forward(net: Network, x) -> list[np.ndarray]:
    """Per-layer outputs ``z^(1) .. z^(L)``; ``x`` may carry leading batch axes."""
    z = _check_point(net, x)
    out = []
    for layer in net.layers:
        z = layer.projections(z).max(axis=-1)
        out.append(z)
    return out


def region_code(net: Network, x) -> LayerCodes:
    """Per-layer argmax piece indices (1-based, ties toward the first piece)."""
    z = _check_point(net, x)
    if z.ndim != 1:
        raise InputError("region_code takes a single point; use region_codes for batches")
    codes = []
    for layer in net.layers:
        proj = layer.projections(z)
        codes.append(tuple(int(r) + 1 for r in np.argmax(proj, axis=-1)))
        z = proj.max(axis=-1)
    return tuple(codes)


def region_codes(net: Network, X) -> list[np.ndarray]:
    """Batched codes: one ``(N, K_l)`` integer array per layer, 1-based."""
    z = _check_point(net, np.atleast_2d(X))
    codes = []
    for layer in net.layers:
        proj = layer.projections(z)
        codes.append(np.argmax(proj, axis=-1) + 1)
        z = proj.max(axis=-1)
    return codes


def select_pieces(layer: MasoLayer, code: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Code-conditioned slope matrix and offset vector of one layer."""
    idx = np.asarray(code, dtype=int) - 1
    if idx.shape != (layer.K,):
        raise StructuralError(f"code of length {len(code)} for layer with K={layer.K}")
    if np.any(idx < 0) or np.any(idx >= layer.R):
        raise StructuralError(f"code entries must lie in 1..{layer.R}")
    rows = np.arange(layer.K)
    return layer.A[rows, idx], layer.B[rows, idx]


def region_affine(net: Network, codes: Sequence[Sequence[int]], up_to: int | None = None) -> AffineMap:
    """Composed affine map from the input to the output of layer ``up_to``."""
    if up_to is None:
        up_to = len(codes)
    if up_to < 0 or up_to > len(net.layers):
        raise StructuralError(f"up_to={up_to} outside 0..{len(net.layers)}")
    if len(codes) < up_to:
        raise StructuralError(f"codes cover {len(codes)} layers, need {up_to}")
    aff = AffineMap.identity(net.input_dim)
    for layer, code in zip(net.layers[:up_to], codes):
        aff = aff.then(*select_pieces(layer, code))
    return aff


def lipschitz_bound(net: Network) -> float:
    """Product over layers of ``sqrt(sum_k max_r ||A[k, r]||^2)``."""
    bound = 1.0
    for layer in net.layers:
        bound *= float(np.sqrt(np.sum(np.max(np.sum(layer.A ** 2, axis=-1), axis=-1))))
    return bound


def slice_network(net: Network, origin, basis) -> Network:
    """Pre-compose ``net`` with the 2D affine slice ``t -> origin + basis @ t``."""
    origin = np.asarray(origin, dtype=np.float64)
    basis = np.asarray(basis, dtype=np.float64)
    if origin.shape != (net.input_dim,) or basis.shape != (net.input_dim, 2):
        raise StructuralError(f"slice needs origin ({net.input_dim},) and basis ({net.input_dim}, 2)")
    first = net.layers[0]
    A = first.A @ basis
    B = first.B + first.A @ origin
    src = None
    if first.source is not None:
        d = first.source
        src = DenseLayer(d.W @ basis, d.b + d.W @ origin, d.act)
    return Network((MasoLayer(A, B, src),) + net.layers[1:], input_dim=2, meta=net.meta)


def _style_matrix(rng: np.random.Generator, rows: int, cols: int, style: str) -> np.ndarray:
    if style == "dense_gaussian":
        return rng.standard_normal((rows, cols))
    if style == "axis_aligned":
        W = np.zeros((rows, cols))
        W[np.arange(rows), rng.integers(0, cols, size=rows)] = rng.choice([-1.0, 1.0], size=rows) * rng.uniform(0.5, 2.0, size=rows)
        return W
    if style == "diagonal_signs":
        return rng.choice([-1.0, 1.0], size=(rows, cols))
    if style == "orthogonal":
        if rows > cols:
            raise StructuralError(f"cannot draw {rows} orthonormal rows in dimension {cols}")
        Q, R = np.linalg.qr(rng.standard_normal((cols, rows)))
        return (Q * np.sign(np.diag(R))).T
    raise StructuralError(f"unknown weight style {style!r}")


@dataclass(frozen=True)
class GeneratorConfig:
    dims: tuple[int, ...]
    activations: tuple[str, ...] | str = "relu"
    weight_style: str = "dense_gaussian"
    seed: int = 0
    eta: float = 0.1
    bias_scale: float = 0.5
    # apply weight_style to the first layer only; later layers stay Gaussian
    style_first_only: bool = True


def random_network(cfg: GeneratorConfig) -> Network:
    """Deterministic random network for a seed.

    Hidden layers take ``cfg.activations`` (one name, or one per hidden
    layer); the last layer is always an identity read-out.
    """
    dims = tuple(int(d) for d in cfg.dims)
    if len(dims) < 2 or min(dims) < 1:
        raise StructuralError(f"dims must list at least input and one layer width, got {dims}")
    n_layers = len(dims) - 1
    acts = cfg.activations
    if isinstance(acts, str):
        acts = (acts,) * (n_layers - 1) + ("identity",)
    elif len(acts) == n_layers - 1:
        acts = tuple(acts) + ("identity",)
    if len(acts) != n_layers:
        raise StructuralError(f"{len(acts)} activations for {n_layers} layers")
    if cfg.weight_style not in WEIGHT_STYLES:
        raise StructuralError(f"unknown weight style {cfg.weight_style!r}")
    rng = np.random.default_rng(cfg.seed)
    layers = []
    for i, act in enumerate(acts):
        rows, cols = dims[i + 1], dims[i]
        style = cfg.weight_style if (i == 0 or not cfg.style_first_only) else "dense_gaussian"
        W = _style_matrix(rng, rows, cols, style)
        if style == "dense_gaussian":
            W = W / np.sqrt(cols)
        b = cfg.bias_scale * rng.standard_normal(rows)
        activation = Activation(act, cfg.eta if act == "leaky_relu" else None)
        layers.append(DenseLayer(W, b, activation))
    meta = {"seed": int(cfg.seed), "generator": cfg.weight_style}
    return Network(layers, input_dim=dims[0], meta=meta)
