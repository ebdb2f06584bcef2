"""Unit edges, decision boundaries and their curvature.

Every segment carries the input-space facet ``(alpha, beta)`` of the host
cell, so ``<alpha, x> + beta`` is the relevant pre-activation (or logit)
along it.  Alphas are kept un-normalized; only :func:`dihedral_angle`
normalizes.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arrangement import DEGENERATE_EPS, Line2D, Partition, line_chord
from .errors import DegenerateError, PreconditionError, StructuralError, UnsupportedError
from .network import AffineMap, MasoLayer, Network, forward, region_affine

SNAP = 1e-9
MIN_SEGMENT = 1e-13


@dataclass(frozen=True, eq=False)
class BoundarySegment:
    p0: np.ndarray
    p1: np.ndarray
    cell: int
    alpha: np.ndarray
    beta: float
    codes: tuple[tuple[int, ...], ...] = ()

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p0 + self.p1)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))

    def residual(self, x) -> float:
        return float(np.asarray(x) @ self.alpha + self.beta)


@dataclass
class PiecewiseLinearPath:
    segments: list[BoundarySegment]
    chains: list[list[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.segments)

    def chain_gaps(self) -> list[float]:
        """Distance between consecutive segments' nearest endpoints, for every chain link."""
        gaps = []
        for chain in self.chains:
            for i, j in zip(chain, chain[1:]):
                a, b = self.segments[i], self.segments[j]
                gaps.append(min(np.linalg.norm(p - q) for p in (a.p0, a.p1) for q in (b.p0, b.p1)))
        return gaps

    def is_closed(self, chain: list[int], snap: float = SNAP) -> bool:
        if len(chain) < 3:
            return False
        a, b = self.segments[chain[0]], self.segments[chain[-1]]
        return min(np.linalg.norm(p - q) for p in (a.p0, a.p1) for q in (b.p0, b.p1)) <= snap

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        """Consecutive segment pairs, including the closing joint of a loop."""
        pairs = []
        for chain in self.chains:
            pairs.extend(zip(chain, chain[1:]))
            if self.is_closed(chain):
                pairs.append((chain[-1], chain[0]))
        return pairs


class _EndpointIndex:
    """Endpoint clustering with a snap radius, using a grid hash plus neighbor lookup."""

    def __init__(self, snap: float):
        self.snap = snap
        self.grid: dict[tuple[int, int], list[int]] = defaultdict(list)
        self.points: list[np.ndarray] = []

    def node(self, p: np.ndarray) -> int:
        key = (int(np.floor(p[0] / self.snap)), int(np.floor(p[1] / self.snap)))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in self.grid.get((key[0] + dx, key[1] + dy), ()):
                    if np.linalg.norm(self.points[idx] - p) <= self.snap:
                        return idx
        self.points.append(p)
        self.grid[key].append(len(self.points) - 1)
        return len(self.points) - 1


def build_chains(segments: Sequence[BoundarySegment], snap: float = SNAP) -> list[list[int]]:
    """Group segments into maximal chains joined at degree-2 endpoints."""
    index = _EndpointIndex(snap)
    ends = [(index.node(s.p0), index.node(s.p1)) for s in segments]
    incident: dict[int, list[int]] = defaultdict(list)
    for i, (a, b) in enumerate(ends):
        incident[a].append(i)
        incident[b].append(i)
    used = [False] * len(segments)
    chains = []

    def walk(start_seg: int, from_node: int) -> list[int]:
        chain = [start_seg]
        used[start_seg] = True
        node = ends[start_seg][1] if ends[start_seg][0] == from_node else ends[start_seg][0]
        while len(incident[node]) == 2:
            nxt = [s for s in incident[node] if not used[s]]
            if not nxt:
                break
            s = nxt[0]
            used[s] = True
            chain.append(s)
            node = ends[s][1] if ends[s][0] == node else ends[s][0]
        return chain

    for node in sorted(incident):
        if len(incident[node]) != 2:
            for s in incident[node]:
                if not used[s]:
                    chains.append(walk(s, node))
    for s in range(len(segments)):
        if not used[s]:
            chains.append(walk(s, ends[s][0]))
    return chains


def _facets(layer: MasoLayer, affine: AffineMap) -> tuple[np.ndarray, np.ndarray]:
    """Input-space (alpha, beta) of each unit's pre-activation on a cell."""
    return layer.A[:, 0] @ affine.A, layer.A[:, 0] @ affine.b + layer.B[:, 0]


def _edge_of(net: Network, partition: Partition, ell: int, k: int) -> PiecewiseLinearPath:
    if partition.depth != ell - 1:
        raise StructuralError(f"partition has depth {partition.depth}, layer {ell} needs depth {ell - 1}")
    layer = net.layer(ell)
    if not 1 <= k <= layer.K:
        raise StructuralError(f"unit index {k} outside 1..{layer.K}")
    segments = []
    for cid, cell in enumerate(partition.cells):
        alpha, beta = _facets(layer, cell.affine)
        a, b = alpha[k - 1], float(beta[k - 1])
        if np.linalg.norm(a) < DEGENERATE_EPS:
            continue
        chord = line_chord(cell.polygon, Line2D(a, b))
        if chord is None or np.linalg.norm(chord[1] - chord[0]) < MIN_SEGMENT:
            continue
        segments.append(BoundarySegment(chord[0], chord[1], cid, a, b, cell.codes))
    return PiecewiseLinearPath(segments, build_chains(segments))


def unit_edge(net: Network, k: int, ell: int, partition: Partition) -> PiecewiseLinearPath:
    """Switching set of unit ``k`` of layer ``ell`` over a depth ``ell-1`` partition."""
    if net.layer(ell).R != 2:
        raise UnsupportedError(f"layer {ell} has R={net.layer(ell).R}; unit edges need two pieces")
    return _edge_of(net, partition, ell, k)


def _require_scalar(net: Network):
    if not net.is_scalar_output():
        raise StructuralError("decision boundary needs a scalar identity read-out as the last layer")


def decision_boundary(net: Network, partition: Partition) -> PiecewiseLinearPath:
    """Zero level set of the scalar logit over a depth ``L-1`` partition."""
    _require_scalar(net)
    return _edge_of(net, partition, len(net), 1)


def boundary_hyperplane(net: Network, codes: Sequence[Sequence[int]]) -> tuple[np.ndarray, float]:
    """Logit ``f(x) = <alpha, x> + beta`` on the cell with hidden codes ``codes``."""
    _require_scalar(net)
    L = len(net)
    if len(codes) != L - 1:
        raise StructuralError(f"need codes for {L - 1} hidden layers, got {len(codes)}")
    aff = region_affine(net, tuple(codes) + ((1,),), L)
    return aff.A[0], float(aff.b[0])


def dihedral_angle(a1, a2) -> float:
    """``|<a1, a2>| / (||a1|| ||a2||)``."""
    a1 = np.asarray(a1, dtype=np.float64)
    a2 = np.asarray(a2, dtype=np.float64)
    n1, n2 = np.linalg.norm(a1), np.linalg.norm(a2)
    if n1 == 0 or n2 == 0:
        raise DegenerateError("dihedral angle of a zero normal")
    return float(min(1.0, abs(a1 @ a2) / (n1 * n2)))


@dataclass(frozen=True)
class ClosedFormCos:
    """Closed-form curvature value; ``value`` is None when the formula is singular."""

    value: float | None
    degenerate: bool = False
    reason: str = ""


def _orthogonal_two_layer(net: Network, kind: str, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    if len(net) != 2:
        raise PreconditionError(f"closed form needs a 2-layer network, got {len(net)} layers")
    _require_scalar(net)
    act = net.activation(1)
    if act is None or act.kind != kind:
        raise PreconditionError(f"first layer must use {kind}, got {act.kind if act else 'a raw MASO layer'}")
    W1 = net.layer(1).A[:, 0]
    w2 = net.layer(2).A[0, 0]
    G = W1 @ W1.T
    off = G - np.diag(np.diag(G))
    if np.max(np.abs(off), initial=0.0) > tol:
        raise PreconditionError(f"first-layer rows are not orthogonal (max |<w_i, w_j>| = {np.max(np.abs(off)):.3g})")
    return W1, w2


def relu_orthogonal_cos(net: Network, neighbor_code: Sequence[int], flipped: int) -> ClosedFormCos:
    """Curvature between the cell where hidden unit ``flipped`` fires and its neighbor where it does not.

    ``neighbor_code`` is the first-layer code of the neighbor (1 = firing).
    With ``c = |w2_d'| ||W1_d'||`` and ``S`` the sum of ``w2_d^2 ||W1_d||^2``
    over the other firing units, ``cos = (1 + c^2 / S)^(-1/2)``.
    """
    W1, w2 = _orthogonal_two_layer(net, "relu")
    d = flipped - 1
    code = np.asarray(neighbor_code, dtype=int)
    if code.shape != (len(w2),) or not 0 <= d < len(w2):
        raise StructuralError("neighbor code / flipped unit do not match the first layer")
    weights = (w2 * np.linalg.norm(W1, axis=1)) ** 2
    c2 = weights[d]
    others = np.sum(weights[(code == 1) & (np.arange(len(w2)) != d)])
    if others == 0:
        return ClosedFormCos(None, True, "no other firing unit: the neighbor's logit is constant")
    if c2 == 0:
        return ClosedFormCos(None, True, "flipped unit does not reach the output")
    return ClosedFormCos(float((1.0 + c2 / others) ** -0.5))


def abs_orthogonal_cos(net: Network, flipped: int) -> ClosedFormCos:
    """Signed cosine between the facets on both sides of hidden unit ``flipped``'s edge.

    ``cos = 1 - 2 c^2 / (c^2 + S)`` with ``S`` summed over every other unit;
    it does not depend on the other units' codes.  The dihedral value is its
    absolute value.
    """
    W1, w2 = _orthogonal_two_layer(net, "abs")
    d = flipped - 1
    if not 0 <= d < len(w2):
        raise StructuralError(f"flipped unit {flipped} outside 1..{len(w2)}")
    weights = (w2 * np.linalg.norm(W1, axis=1)) ** 2
    c2 = weights[d]
    total = c2 + np.sum(np.delete(weights, d))
    if c2 == 0 or total == 0:
        return ClosedFormCos(None, True, "flipped unit does not reach the output")
    return ClosedFormCos(float(1.0 - 2.0 * c2 / total))


def partition_polynomial(net: Network, x, ell: int) -> float:
    """Product of every unit output of layers ``1 .. ell``."""
    zs = forward(net, x)
    if not 1 <= ell <= len(net):
        raise StructuralError(f"layer {ell} outside 1..{len(net)}")
    return float(np.prod(np.concatenate(zs[:ell])))


def preactivation(net: Network, x, ell: int, k: int) -> tuple[float, float]:
    """Pre-activation of unit ``k`` of layer ``ell`` at ``x`` and its round-off scale."""
    layer = net.layer(ell)
    z = np.asarray(x, dtype=np.float64) if ell == 1 else forward(net, x)[ell - 2]
    terms = layer.A[k - 1, 0] * z
    value = float(np.sum(terms) + layer.B[k - 1, 0])
    return value, 1.0 + float(np.sum(np.abs(terms)) + abs(layer.B[k - 1, 0]))


@dataclass(frozen=True)
class FacetPair:
    segments: tuple[int, int]
    cells: tuple[int, int]
    point: np.ndarray
    cos: float
    changed_units: tuple[tuple[int, int], ...]


def _changed_units(c1, c2) -> tuple[tuple[int, int], ...]:
    out = []
    for ell, (a, b) in enumerate(zip(c1, c2), start=1):
        out.extend((ell, k + 1) for k, (x, y) in enumerate(zip(a, b)) if x != y)
    return tuple(out)


def boundary_angles(path: PiecewiseLinearPath) -> list[FacetPair]:
    """Dihedral cosine at every joint between consecutive segments of a path."""
    pairs = []
    for i, j in path.adjacent_pairs():
        a, b = path.segments[i], path.segments[j]
        pts = [(p, q) for p in (a.p0, a.p1) for q in (b.p0, b.p1)]
        p, q = min(pts, key=lambda pq: np.linalg.norm(pq[0] - pq[1]))
        pairs.append(FacetPair((i, j), (a.cell, b.cell), 0.5 * (p + q), dihedral_angle(a.alpha, b.alpha),
                               _changed_units(a.codes, b.codes)))
    return pairs
