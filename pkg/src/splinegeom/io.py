"""JSON / CSV formats for networks, datasets, partitions and boundaries."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .arrangement import Cell, ConvexPolygon, CutSegment, Partition, SubdivisionStats
from .boundary import BoundarySegment, PiecewiseLinearPath, build_chains
from .errors import GeometryError, InputError, StructuralError
from .network import Activation, AffineMap, DenseLayer, Network


class FormatError(StructuralError):
    """Malformed document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _matrix(value, path: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(path, f"expected numbers ({exc})") from None
    if not np.all(np.isfinite(arr)):
        raise FormatError(path, "entries must be finite")
    return arr


def network_from_dict(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise FormatError("", "network spec must be a JSON object")
    if "input_dim" not in doc:
        raise FormatError("input_dim", "missing")
    input_dim = doc["input_dim"]
    if not isinstance(input_dim, int) or isinstance(input_dim, bool) or input_dim < 1:
        raise FormatError("input_dim", f"expected a positive integer, got {input_dim!r}")
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise FormatError("layers", "expected a non-empty list")
    dense = []
    prev = input_dim
    for i, spec in enumerate(layers):
        here = f"layers[{i}]"
        if not isinstance(spec, dict):
            raise FormatError(here, "expected an object")
        for key in ("W", "b", "activation"):
            if key not in spec:
                raise FormatError(f"{here}.{key}", "missing")
        W = _matrix(spec["W"], f"{here}.W")
        b = _matrix(spec["b"], f"{here}.b")
        if W.ndim != 2:
            raise FormatError(f"{here}.W", f"expected a row-major matrix, got shape {W.shape}")
        if W.shape[1] != prev:
            raise FormatError(f"{here}.W", f"has {W.shape[1]} columns, previous width is {prev}")
        if b.shape != (W.shape[0],):
            raise FormatError(f"{here}.b", f"has shape {b.shape}, expected ({W.shape[0]},)")
        try:
            act = Activation(spec["activation"], spec.get("eta"))
        except StructuralError as exc:
            field = "eta" if "eta" in str(exc) else "activation"
            raise FormatError(f"{here}.{field}", str(exc)) from None
        dense.append(DenseLayer(W, b, act))
        prev = W.shape[0]
    return Network(dense, input_dim=input_dim, meta=doc.get("meta") or {})


def parse_network(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("", f"malformed JSON: {exc}") from None
    return network_from_dict(doc)


def network_to_dict(net: Network) -> dict:
    layers = []
    for i, layer in enumerate(net.layers):
        if layer.source is None:
            raise StructuralError(f"layers[{i}] has no dense description to serialize")
        d = layer.source
        entry = {"W": d.W.tolist(), "b": d.b.tolist(), "activation": d.act.kind}
        if d.act.eta is not None:
            entry["eta"] = d.act.eta
        layers.append(entry)
    return {"input_dim": net.input_dim, "layers": layers, "meta": dict(net.meta)}


def emit_network(net: Network) -> str:
    return json.dumps(network_to_dict(net), indent=2)


def load_network(path) -> Network:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=np.float64)
    except ValueError:
        raise InputError(f"cannot parse point {text!r}") from None


def parse_domain(text: str) -> ConvexPolygon:
    vals = parse_point(text)
    if len(vals) != 4:
        raise InputError(f"domain needs xmin,ymin,xmax,ymax, got {text!r}")
    return ConvexPolygon.box(*vals)


def read_dataset(path) -> np.ndarray:
    """Comma-separated points, one per row; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise InputError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows have differing lengths")
    X = np.array(rows)
    if not np.all(np.isfinite(X)):
        raise InputError(f"{path}: non-finite value")
    return X


def write_dataset(path, X, header: bool = True):
    X = np.asarray(X)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i}" for i in range(X.shape[1])])
        w.writerows(X.tolist())


def _codes_list(codes):
    return [list(c) for c in codes]


def partition_to_dict(partition: Partition) -> dict:
    cells = []
    for cell in partition.cells:
        cells.append({
            "vertices": cell.polygon.vertices.tolist(),
            "codes": _codes_list(cell.codes),
            "affine": {"A": cell.affine.A.tolist(), "b": cell.affine.b.tolist()},
            "centroid": None if cell.centroid is None else cell.centroid.tolist(),
            "radius": cell.radius,
            "area": cell.polygon.area,
        })
    doc = {
        "depth": partition.depth,
        "domain": partition.domain.vertices.tolist(),
        "cells": cells,
        "cuts": [{"depth": c.depth, "unit": c.unit, "p0": c.p0.tolist(), "p1": c.p1.tolist()} for c in partition.cuts],
        "stats": partition.stats.to_dict(),
    }
    if partition.net is not None and all(l.source is not None for l in partition.net.layers):
        doc["network"] = network_to_dict(partition.net)
    return doc


def partition_from_dict(doc: dict) -> Partition:
    try:
        cells = [
            Cell(
                ConvexPolygon(c["vertices"]),
                tuple(tuple(int(v) for v in code) for code in c["codes"]),
                AffineMap(np.array(c["affine"]["A"], dtype=np.float64), np.array(c["affine"]["b"], dtype=np.float64)),
                None if c.get("centroid") is None else np.array(c["centroid"], dtype=np.float64),
                c.get("radius"),
            )
            for c in doc["cells"]
        ]
        cuts = [CutSegment(c["depth"], c["unit"], np.array(c["p0"]), np.array(c["p1"])) for c in doc.get("cuts", [])]
        net = network_from_dict(doc["network"]) if "network" in doc else None
        return Partition(cells, ConvexPolygon(doc["domain"]), int(doc["depth"]),
                         SubdivisionStats.from_dict(doc["stats"]), cuts, net)
    except GeometryError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("", f"malformed partition document ({exc!r})") from None


def load_partition(path) -> Partition:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError("", f"malformed JSON: {exc}") from None
    return partition_from_dict(doc)


def partition_csv(partition: Partition) -> str:
    """One row per cell: id, depth, area, codes, centroid, radius, vertices (flattened)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell", "depth", "area", "codes", "centroid_x", "centroid_y", "radius", "n_vertices", "vertices"])
    for i, cell in enumerate(partition.cells):
        mu = cell.centroid if cell.centroid is not None else [None, None]
        w.writerow([
            i, cell.depth, repr(cell.polygon.area),
            "|".join(" ".join(str(v) for v in code) for code in cell.codes),
            mu[0], mu[1], cell.radius, len(cell.polygon.vertices),
            " ".join(f"{x!r}:{y!r}" for x, y in cell.polygon.vertices.tolist()),
        ])
    return buf.getvalue()


def boundary_to_dict(path: PiecewiseLinearPath) -> dict:
    return {
        "segments": [
            {"p0": s.p0.tolist(), "p1": s.p1.tolist(), "alpha": s.alpha.tolist(), "beta": s.beta,
             "cells": [s.cell], "codes": _codes_list(s.codes)}
            for s in path.segments
        ],
        "chains": path.chains,
    }


def boundary_from_dict(doc: dict) -> PiecewiseLinearPath:
    try:
        segs = [
            BoundarySegment(np.array(s["p0"], dtype=np.float64), np.array(s["p1"], dtype=np.float64),
                            int(s["cells"][0]), np.array(s["alpha"], dtype=np.float64), float(s["beta"]),
                            tuple(tuple(c) for c in s.get("codes", [])))
            for s in doc["segments"]
        ]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError("segments", f"malformed boundary document ({exc!r})") from None
    chains = doc.get("chains")
    return PiecewiseLinearPath(segs, chains if chains is not None else build_chains(segs))


def load_boundary(path) -> PiecewiseLinearPath:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError("", f"malformed JSON: {exc}") from None
    return boundary_from_dict(doc)
