"""Command-line entry point: ``splinegeom <command> ...``.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 capacity error.
Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, io
from .arrangement import enumerate_partition
from .bench import bench_inference
from .boundary import boundary_angles, decision_boundary
from .errors import GeometryError
from .network import GeneratorConfig, forward, random_network, region_code


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(doc, out: str | None):
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _net_and_domain(args):
    net = io.load_network(args.net)
    return net, io.parse_domain(args.domain)


def _check_depth(net, depth: int):
    if not 0 <= depth <= len(net):
        raise UsageError(f"--depth {depth} outside 0..{len(net)} for a {len(net)}-layer network")


def cmd_gen(args):
    dims = tuple(int(t) for t in args.dims.split(","))
    acts = args.act if "," not in args.act else tuple(args.act.split(","))
    net = random_network(GeneratorConfig(dims, acts, args.style, args.seed, eta=args.eta))
    text = io.emit_network(net)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def cmd_infer(args):
    net = io.load_network(args.net)
    x = io.parse_point(args.point)
    _write_json({"point": x.tolist(), "codes": [list(c) for c in region_code(net, x)],
                 "outputs": [z.tolist() for z in forward(net, x)]}, None)


def cmd_enumerate(args):
    net, domain = _net_and_domain(args)
    depth = len(net) if args.depth is None else args.depth
    _check_depth(net, depth)
    part = enumerate_partition(net, domain, depth, cell_cap=args.cap)
    _write_json(io.partition_to_dict(part), args.out)
    if args.csv:
        Path(args.csv).write_text(io.partition_csv(part), encoding="utf-8")
    if args.figure:
        from .plotting import plot_partition
        plot_partition(part, args.figure)


def _boundary(net, domain, cap):
    part = enumerate_partition(net, domain, len(net) - 1, cell_cap=cap)
    return part, decision_boundary(net, part)


def cmd_boundary(args):
    net, domain = _net_and_domain(args)
    part, path = _boundary(net, domain, args.cap)
    _write_json(io.boundary_to_dict(path), args.out)
    if args.figure:
        from .plotting import plot_partition
        plot_partition(part, args.figure, path)


def cmd_svg(args):
    from .svg import emit_svg
    part = io.load_partition(args.partition)
    boundary = io.load_boundary(args.boundary) if args.boundary else None
    Path(args.out).write_text(emit_svg(part, boundary), encoding="utf-8")
    if args.figure:
        from .plotting import plot_partition
        plot_partition(part, args.figure, boundary)


def cmd_angles(args):
    net, domain = _net_and_domain(args)
    _, path = _boundary(net, domain, args.cap)
    rows = [{"segments": list(p.segments), "cells": list(p.cells), "point": p.point.tolist(), "cos": p.cos,
             "changed_units": [list(u) for u in p.changed_units]} for p in boundary_angles(path)]
    _write_json({"pairs": rows}, args.out)


def cmd_centroids(args):
    net = io.load_network(args.net)
    mu, rad = analysis.region_centroid_radius(net, io.parse_point(args.point), args.layer)
    _write_json({"layer": args.layer, "centroid": mu.tolist(), "radius": rad}, None)


def cmd_margins(args):
    net = io.load_network(args.net)
    report = analysis.distance_distribution(net, io.read_dataset(args.data), args.layer)
    _write_json(report, args.out)
    if args.figure:
        from .plotting import plot_distance_histogram
        plot_distance_histogram(report, args.figure)


def cmd_occupancy(args):
    net = io.load_network(args.net)
    depth = len(net) if args.depth is None else args.depth
    _check_depth(net, depth)
    report = analysis.code_occupancy(net, io.read_dataset(args.data), depth).to_dict()
    _write_json(report, args.out)
    if args.figure:
        from .plotting import plot_occupancy
        plot_occupancy(report, args.figure)


def cmd_stats(args):
    part = io.load_partition(args.partition)
    _write_json(part.stats.to_dict(), None)


def cmd_bench(args):
    widths = list(range(1, args.max_k + 1)) if args.widths is None else [int(t) for t in args.widths.split(",")]
    report = bench_inference(widths, trials=args.trials, seed=args.seed, repeats=args.repeats)
    doc = report.to_dict()
    _write_json(doc, args.out)
    if args.figure:
        from .plotting import plot_bench
        plot_bench(doc, args.figure)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="splinegeom", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen", help="generate a random network")
    s.add_argument("--dims", required=True, help="comma-separated widths, input first")
    s.add_argument("--act", default="relu", help="hidden activation, or one per hidden layer")
    s.add_argument("--style", default="dense_gaussian",
                   choices=["dense_gaussian", "axis_aligned", "diagonal_signs", "orthogonal"])
    s.add_argument("--eta", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("infer", help="region codes and layer outputs at a point")
    s.add_argument("--net", required=True)
    s.add_argument("--point", required=True)
    s.set_defaults(fn=cmd_infer)

    def geometry(name, fn, help, out_required=False):
        s = sub.add_parser(name, help=help)
        s.add_argument("--net", required=True)
        s.add_argument("--domain", default="-1,-1,1,1", help="xmin,ymin,xmax,ymax")
        s.add_argument("--cap", type=int, default=1_000_000)
        s.add_argument("--out", required=out_required)
        s.set_defaults(fn=fn)
        return s

    s = geometry("enumerate", cmd_enumerate, "exact partition of a 2D domain")
    s.add_argument("--depth", type=int)
    s.add_argument("--csv")
    s.add_argument("--figure", help="also render a matplotlib figure (png/pdf/svg)")
    s = geometry("boundary", cmd_boundary, "decision boundary segments")
    s.add_argument("--figure")
    geometry("angles", cmd_angles, "dihedral cosines between adjacent boundary facets")

    s = sub.add_parser("svg", help="render a partition (and boundary) as SVG")
    s.add_argument("--partition", required=True)
    s.add_argument("--boundary")
    s.add_argument("--out", required=True)
    s.add_argument("--figure")
    s.set_defaults(fn=cmd_svg)

    s = sub.add_parser("centroids", help="power-diagram centroid and radius of a point's region")
    s.add_argument("--net", required=True)
    s.add_argument("--point", required=True)
    s.add_argument("--layer", type=int, required=True)
    s.set_defaults(fn=cmd_centroids)

    s = sub.add_parser("margins", help="log-distance histogram of layer margins over a dataset")
    s.add_argument("--net", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--layer", type=int, required=True)
    s.add_argument("--out")
    s.add_argument("--figure")
    s.set_defaults(fn=cmd_margins)

    s = sub.add_parser("occupancy", help="points per region over a dataset")
    s.add_argument("--net", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--depth", type=int)
    s.add_argument("--out")
    s.add_argument("--figure")
    s.set_defaults(fn=cmd_occupancy)

    s = sub.add_parser("stats", help="subdivision counts and bound checks of a saved partition")
    s.add_argument("--partition", required=True)
    s.set_defaults(fn=cmd_stats)

    s = sub.add_parser("bench", help="per-unit vs exhaustive region inference timing")
    s.add_argument("--max-k", type=int, default=12)
    s.add_argument("--widths", help="explicit comma-separated K values (overrides --max-k)")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--repeats", type=int, default=5)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--figure")
    s.set_defaults(fn=cmd_bench)
    return p


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


_COORD_OPTIONS = ("--domain", "--point")


def _join_coordinates(argv: list[str]) -> list[str]:
    """Glue ``--domain -1,-1,1,1`` into ``--domain=-1,-1,1,1`` so argparse does not read it as a flag."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _COORD_OPTIONS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_join_coordinates(argv))
        args.fn(args)
    except UsageError as exc:
        return _fail(1, "usage", str(exc))
    except GeometryError as exc:
        return _fail(exc.exit_code, exc.kind, str(exc))
    except OSError as exc:
        return _fail(1, "usage", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
