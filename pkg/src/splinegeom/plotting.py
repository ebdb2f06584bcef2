"""Matplotlib figures written next to the JSON reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402

from .arrangement import Partition  # noqa: E402
from .boundary import PiecewiseLinearPath  # noqa: E402
from .svg import PALETTE, code_color  # noqa: E402

RC = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def plot_partition(partition: Partition, path, boundary: PiecewiseLinearPath | None = None, title: str | None = None):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        polys = [c.polygon.vertices for c in partition.cells]
        ax.add_collection(PolyCollection(polys, facecolors=[code_color(c.codes) for c in partition.cells],
                                         edgecolors="none"))
        prev = [(c.p0, c.p1) for c in partition.cuts if c.depth < partition.depth]
        cur = [(c.p0, c.p1) for c in partition.cuts if c.depth == partition.depth]
        ax.add_collection(LineCollection(prev, colors="0.6", linewidths=0.6))
        ax.add_collection(LineCollection(cur, colors="0.1", linewidths=0.8))
        if boundary is not None and len(boundary):
            ax.add_collection(LineCollection([(s.p0, s.p1) for s in boundary.segments], colors="#d62728", linewidths=1.6))
        xmin, ymin, xmax, ymax = partition.domain.bounds
        ax.set_xlim(xmin, xmax)
        ax.set_ylim(ymin, ymax)
        ax.set_aspect("equal")
        ax.set_title(title or f"{len(partition)} cells at depth {partition.depth}")
        _save(fig, path)


def plot_distance_histogram(report: dict, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3))
        edges = np.asarray(report["bin_edges"])
        counts = np.asarray(report["counts"])
        if counts.sum():
            ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", color=PALETTE[4], edgecolor="0.3", linewidth=0.3)
        ax.set_xlabel(r"$\log_{10}$ margin")
        ax.set_ylabel("points")
        ax.set_title(f"layer {report['layer']} margins (n={report['n_points']}, zero={report['neg_inf_count']})")
        _save(fig, path)


def plot_occupancy(report: dict, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3))
        sizes = sorted(int(k) for k in report["size_histogram"])
        ax.bar([str(s) for s in sizes], [report["size_histogram"][str(s)] for s in sizes], color=PALETTE[0], edgecolor="0.3")
        ax.set_xlabel("points per region")
        ax.set_ylabel("regions")
        ax.set_title(f"{report['distinct_codes']} regions for {report['n_points']} points")
        _save(fig, path)


def plot_bench(report: dict, path):
    rows = report["rows"]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3))
        K = [r["K"] for r in rows]
        ax.semilogy(K, [r["structured_ns"] for r in rows], "o-", label="per-unit argmax")
        ax.semilogy(K, [r["naive_ns"] for r in rows], "s-", label="exhaustive Laguerre")
        ax.set_xlabel("units K")
        ax.set_ylabel("median ns per batch")
        ax.legend(frameon=False)
        _save(fig, path)
