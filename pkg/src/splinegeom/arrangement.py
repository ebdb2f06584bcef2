"""Exact partition of a 2D convex domain by recursive per-layer subdivision.

Within a cell of the depth ``l-1`` partition every layer-``l`` unit is
affine in the input, so its switching set is a straight line there.  Each
cell is cut by the units of the next layer in ascending order; the side
where the piece difference is non-negative receives code 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapacityError, InputError, StructuralError, UnsupportedError
from .network import AffineMap, Network, select_pieces
from .power import cell_centroid_radius

MIN_AREA = 1e-12
DEGENERATE_EPS = 1e-12
EDGE_EPS = 1e-9
DEFAULT_CELL_CAP = 1_000_000


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise)."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _dedupe(vertices: np.ndarray, tol: float) -> np.ndarray:
    if len(vertices) == 0:
        return vertices
    keep = [vertices[0]]
    for v in vertices[1:]:
        if np.max(np.abs(v - keep[-1])) > tol:
            keep.append(v)
    if len(keep) > 1 and np.max(np.abs(keep[0] - keep[-1])) <= tol:
        keep.pop()
    return np.array(keep)


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        scale = max(1.0, float(np.max(np.abs(v)))) if len(v) else 1.0
        v = _dedupe(v, 1e-14 * scale)
        if len(v) < 3:
            raise StructuralError(f"polygon needs at least 3 distinct vertices, got {len(v)}")
        if polygon_area(v) < 0:
            v = v[::-1].copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def box(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "ConvexPolygon":
        if not (xmax > xmin and ymax > ymin):
            raise InputError(f"empty box ({xmin}, {ymin}, {xmax}, {ymax})")
        return cls(np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]], dtype=np.float64))

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def interior_point(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def is_convex(self, tol: float = 1e-12) -> bool:
        v = self.vertices
        n = len(v)
        return all(_cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) >= -tol for i in range(n))

    def halfplanes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit inward normals ``n`` and offsets ``c`` with ``n.x + c >= 0`` inside."""
        p, q = self.edges()
        d = q - p
        n = np.stack([-d[:, 1], d[:, 0]], axis=1)
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        return n, -np.sum(n * p, axis=1)

    def contains(self, x, tol: float = 0.0) -> bool:
        n, c = self.halfplanes()
        return bool(np.all(n @ np.asarray(x, dtype=np.float64) + c >= -tol))


@dataclass(frozen=True, eq=False)
class Line2D:
    """The line ``<normal, x> + offset = 0``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(2)
        if not np.linalg.norm(n) > 0:
            raise StructuralError("line normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def __call__(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.normal + self.offset

    def distance(self, X) -> np.ndarray:
        return np.abs(self(X)) / np.linalg.norm(self.normal)


def _clip_raw(v: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman against ``vals >= 0`` for one convex ring."""
    out = []
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        fa, fb = vals[i], vals[(i + 1) % n]
        if fa >= 0:
            out.append(a)
        if (fa > 0 > fb) or (fa < 0 < fb):
            t = fa / (fa - fb)
            out.append(a + t * (b - a))
    return np.array(out) if out else np.zeros((0, 2))


def _as_polygon(v: np.ndarray, min_area: float) -> ConvexPolygon | None:
    if len(v) < 3 or polygon_area(v) < min_area:
        return None
    try:
        return ConvexPolygon(v)
    except StructuralError:
        return None


def clip_halfplane(poly: ConvexPolygon, line: Line2D, keep: int = 1, min_area: float = MIN_AREA) -> ConvexPolygon | None:
    """``poly`` intersected with ``{x : keep * line(x) >= 0}``, or None when negligible."""
    if keep not in (1, -1):
        raise StructuralError("keep must be +1 or -1")
    vals = keep * line(poly.vertices)
    if np.all(vals >= 0):
        return poly
    return _as_polygon(_clip_raw(poly.vertices, vals), min_area)


def split_by_line(poly: ConvexPolygon, line: Line2D, min_area: float = MIN_AREA) -> tuple[ConvexPolygon | None, ConvexPolygon | None]:
    """``(negative part, positive part)``.

    A side thinner than ``min_area`` is absorbed: the other slot then holds
    ``poly`` unchanged, so areas are always conserved.
    """
    vals = line(poly.vertices)
    if np.all(vals >= 0):
        return None, poly
    if np.all(vals <= 0):
        return poly, None
    pos = _clip_raw(poly.vertices, vals)
    neg = _clip_raw(poly.vertices, -vals)
    a_pos = polygon_area(pos) if len(pos) >= 3 else 0.0
    a_neg = polygon_area(neg) if len(neg) >= 3 else 0.0
    if a_neg < min_area or a_pos < min_area:
        return (None, poly) if a_pos >= a_neg else (poly, None)
    p_neg, p_pos = _as_polygon(neg, 0.0), _as_polygon(pos, 0.0)
    if p_neg is None or p_pos is None:
        return (None, poly) if a_pos >= a_neg else (poly, None)
    return p_neg, p_pos


def line_chord(poly: ConvexPolygon, line: Line2D, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray] | None:
    """Segment where ``line`` crosses ``poly`` (parametric clipping), or None."""
    a = line.normal
    na2 = float(a @ a)
    p0 = -line.offset * a / na2
    d = np.array([-a[1], a[0]]) / np.sqrt(na2)
    n, c = poly.halfplanes()
    lo, hi = -np.inf, np.inf
    for ni, ci in zip(n, c):
        num = ni @ p0 + ci
        den = ni @ d
        if abs(den) < 1e-15:
            if num < -tol:
                return None
            continue
        t = -num / den
        if den > 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
    if not hi - lo > tol:
        return None
    return p0 + lo * d, p0 + hi * d


@dataclass(eq=False)
class Cell:
    polygon: ConvexPolygon
    codes: tuple[tuple[int, ...], ...]
    affine: AffineMap
    centroid: np.ndarray | None = None
    radius: float | None = None

    @property
    def depth(self) -> int:
        return len(self.codes)


@dataclass
class SubdivisionStats:
    cells_per_depth: list[int]
    crossings: list[list[int]]
    widths: list[int]
    pieces: list[int] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.cells_per_depth) - 1

    def identity_holds(self) -> bool:
        return all(
            self.cells_per_depth[l] == self.cells_per_depth[l - 1] + sum(self.crossings[l - 1])
            for l in range(1, len(self.cells_per_depth))
        )

    def upper_bounds(self) -> list[int]:
        """``R^(1) * prod_{2 <= j <= l} (1 + K^(j))`` for every depth ``l >= 1``."""
        if self.depth == 0:
            return []
        bounds = [self.cells_per_depth[1]]
        for width in self.widths[1:]:
            bounds.append(bounds[-1] * (1 + width))
        return bounds

    def loose_upper_bounds(self) -> list[int]:
        """Same product but starting at the first layer, ``R^(1) * prod_{j <= l} (1 + K^(j))``."""
        if self.depth == 0:
            return []
        out, prod = [], 1
        for width in self.widths:
            prod *= 1 + width
            out.append(self.cells_per_depth[1] * prod)
        return out

    def first_layer_bound(self) -> int | None:
        """``R^K`` cell cap of the first layer's power diagram."""
        if self.depth == 0:
            return None
        return self.pieces[0] ** self.widths[0]

    def bounds_hold(self) -> bool:
        ok = all(r <= u for r, u in zip(self.cells_per_depth[1:], self.upper_bounds()))
        fb = self.first_layer_bound()
        return ok and (fb is None or self.cells_per_depth[1] <= fb)

    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.cells_per_depth, self.cells_per_depth[1:]))

    def to_dict(self) -> dict:
        return {
            "cells_per_depth": list(self.cells_per_depth),
            "crossings": [list(h) for h in self.crossings],
            "widths": list(self.widths),
            "pieces": list(self.pieces),
            "identity_holds": self.identity_holds(),
            "upper_bounds": self.upper_bounds(),
            "loose_upper_bounds": self.loose_upper_bounds(),
            "first_layer_bound": self.first_layer_bound(),
            "bounds_hold": self.bounds_hold(),
            "monotone": self.monotone(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubdivisionStats":
        return cls(list(d["cells_per_depth"]), [list(h) for h in d["crossings"]], list(d["widths"]), list(d.get("pieces", [])))


@dataclass(frozen=True)
class CutSegment:
    """A chord introduced by unit ``unit`` (1-based) of layer ``depth``."""

    depth: int
    unit: int
    p0: np.ndarray
    p1: np.ndarray


@dataclass(frozen=True)
class Location:
    cell: int | None
    ambiguous: bool
    candidates: tuple[int, ...]


@dataclass(eq=False)
class Partition:
    cells: list[Cell]
    domain: ConvexPolygon
    depth: int
    stats: SubdivisionStats
    cuts: list[CutSegment] = field(default_factory=list)
    net: Network | None = None
    _planes: list | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.cells)

    def total_area(self) -> float:
        return float(sum(c.polygon.area for c in self.cells))

    def _halfplanes(self):
        if self._planes is None:
            dn, dc = self.domain.halfplanes()
            planes = []
            for cell in self.cells:
                n, c = cell.polygon.halfplanes()
                p, q = cell.polygon.edges()
                on_domain = np.zeros(len(n), dtype=bool)
                for ni, ci in zip(dn, dc):
                    on_domain |= (np.abs(p @ ni + ci) <= EDGE_EPS) & (np.abs(q @ ni + ci) <= EDGE_EPS)
                planes.append((n, c, ~on_domain))
            self._planes = planes
        return self._planes

    def internal_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints ``(P, Q)`` of every cell edge not lying on the domain boundary."""
        P, Q = [], []
        for cell, (_, _, internal) in zip(self.cells, self._halfplanes()):
            p, q = cell.polygon.edges()
            P.append(p[internal])
            Q.append(q[internal])
        if not P:
            return np.zeros((0, 2)), np.zeros((0, 2))
        return np.concatenate(P), np.concatenate(Q)

    def locate_many(self, X, edge_eps: float = EDGE_EPS) -> tuple[np.ndarray, np.ndarray]:
        """Cell ids (``-1`` when outside or ambiguous) and an ambiguity mask."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        ids = np.full(len(X), -1, dtype=int)
        near = np.zeros(len(X), dtype=bool)
        for i, (n, c, internal) in enumerate(self._halfplanes()):
            d = X @ n.T + c
            loose = np.all(d >= -edge_eps, axis=1)
            if not loose.any():
                continue
            strict = loose & np.all(np.where(internal, d > edge_eps, True), axis=1)
            ids[strict] = i
            near |= loose & ~strict
        near &= ids < 0
        return ids, near

    def locate(self, x, edge_eps: float = EDGE_EPS) -> Location:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (2,):
            raise InputError(f"expected a 2D point, got shape {x.shape}")
        if not self.domain.contains(x, tol=edge_eps):
            raise InputError(f"point {x.tolist()} lies outside the domain")
        candidates = []
        strict = None
        for i, (n, c, internal) in enumerate(self._halfplanes()):
            d = n @ x + c
            if np.all(d >= -edge_eps):
                candidates.append(i)
                if np.all(np.where(internal, d > edge_eps, True)):
                    strict = i
        if strict is not None:
            return Location(strict, False, (strict,))
        return Location(None, True, tuple(candidates))

    def exact_margin(self, x) -> float:
        """Distance from ``x`` to the nearest internal cell edge (``inf`` if there is none)."""
        x = np.asarray(x, dtype=np.float64)
        if not self.domain.contains(x, tol=EDGE_EPS):
            raise InputError(f"point {x.tolist()} lies outside the domain")
        P, Q = self.internal_edges()
        if len(P) == 0:
            return float("inf")
        return float(np.min(segment_distances(x, P, Q)))


def segment_distances(x: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    d = Q - P
    dd = np.sum(d * d, axis=1)
    t = np.clip(np.sum((x - P) * d, axis=1) / np.where(dd > 0, dd, 1.0), 0.0, 1.0)
    return np.linalg.norm(P + t[:, None] * d - x, axis=1)


def preactivation_lines(layer, affine: AffineMap) -> tuple[np.ndarray, np.ndarray]:
    """Input-space normals ``(K, 2)`` and offsets ``(K,)`` of every unit's switching line."""
    da, db = layer.piece_difference()
    return da @ affine.A, da @ affine.b + db


def unit_cut_line(net: Network, cell: Cell, ell: int, k: int) -> Line2D | None:
    """Switching line of unit ``k`` of layer ``ell`` across a depth ``ell-1`` cell."""
    layer = net.layer(ell)
    if layer.R != 2:
        raise UnsupportedError(f"layer {ell} has R={layer.R}; cut lines need two pieces")
    if cell.depth != ell - 1:
        raise StructuralError(f"cell has depth {cell.depth}, layer {ell} needs depth {ell - 1}")
    if not 1 <= k <= layer.K:
        raise StructuralError(f"unit index {k} outside 1..{layer.K}")
    alpha, beta = preactivation_lines(layer, cell.affine)
    if np.linalg.norm(alpha[k - 1]) < DEGENERATE_EPS:
        return None
    return Line2D(alpha[k - 1], beta[k - 1])


def root_cell(domain: ConvexPolygon) -> Cell:
    return Cell(domain, (), AffineMap.identity(2))


def subdivide(net: Network, cells: Sequence[Cell], ell: int, cuts: list | None = None,
              min_area: float = MIN_AREA) -> tuple[list[Cell], list[int]]:
    """Cut every depth ``ell-1`` cell by the units of layer ``ell``.

    Returns the new cells and the per-unit crossing counts.
    """
    layer = net.layer(ell)
    if layer.R not in (1, 2):
        raise UnsupportedError(f"layer {ell} has R={layer.R}; only one- or two-piece layers can be enumerated")
    crossings = [0] * layer.K
    out = []
    for cell in cells:
        if layer.R == 1:
            pieces = [(cell.polygon, (1,) * layer.K)]
        else:
            alpha, beta = preactivation_lines(layer, cell.affine)
            pieces = [(cell.polygon, ())]
            for k in range(layer.K):
                if np.linalg.norm(alpha[k]) < DEGENERATE_EPS:
                    bit = 1 if beta[k] >= 0 else 2
                    pieces = [(p, bits + (bit,)) for p, bits in pieces]
                    continue
                line = Line2D(alpha[k], beta[k])
                nxt = []
                for poly, bits in pieces:
                    neg, pos = split_by_line(poly, line, min_area)
                    if neg is not None and pos is not None:
                        crossings[k] += 1
                        if cuts is not None:
                            chord = line_chord(poly, line)
                            if chord is not None:
                                cuts.append(CutSegment(ell, k + 1, chord[0], chord[1]))
                    if pos is not None:
                        nxt.append((pos, bits + (1,)))
                    if neg is not None:
                        nxt.append((neg, bits + (2,)))
                pieces = nxt
        for poly, code in pieces:
            A_sel, B_sel = select_pieces(layer, code)
            mu, rad = cell_centroid_radius(layer, code, cell.affine.A, cell.affine.b)
            out.append(Cell(poly, cell.codes + (code,), cell.affine.then(A_sel, B_sel), mu, rad))
    return out, crossings


def enumerate_partition(net: Network, domain: ConvexPolygon, up_to: int | None = None,
                        cell_cap: int = DEFAULT_CELL_CAP, min_area: float = MIN_AREA) -> Partition:
    """Exact partition of ``domain`` induced by layers ``1 .. up_to``."""
    if net.input_dim != 2:
        raise StructuralError(f"exact enumeration is 2D only; slice the {net.input_dim}D network first")
    if up_to is None:
        up_to = len(net)
    if not 0 <= up_to <= len(net):
        raise StructuralError(f"depth {up_to} outside 0..{len(net)}")
    for ell in range(1, up_to + 1):
        if net.layer(ell).R not in (1, 2):
            raise UnsupportedError(f"layer {ell} has R={net.layer(ell).R}")
    cells = [root_cell(domain)]
    cuts: list[CutSegment] = []
    stats = SubdivisionStats([1], [], [], [])
    for ell in range(1, up_to + 1):
        cells, crossings = subdivide(net, cells, ell, cuts, min_area)
        if len(cells) > cell_cap:
            raise CapacityError(f"depth {ell} produced {len(cells)} cells, cap is {cell_cap}")
        layer = net.layer(ell)
        stats.cells_per_depth.append(len(cells))
        stats.crossings.append(crossings)
        stats.widths.append(layer.K)
        stats.pieces.append(layer.R)
    return Partition(cells, domain, up_to, stats, cuts, net)


def subdivision_stats(partition: Partition) -> SubdivisionStats:
    return partition.stats
