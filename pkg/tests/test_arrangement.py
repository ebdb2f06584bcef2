from collections import defaultdict

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import grid, mixed_net
from splinegeom.arrangement import (
    EDGE_EPS,
    ConvexPolygon,
    Line2D,
    clip_halfplane,
    enumerate_partition,
    root_cell,
    split_by_line,
    subdivide,
    subdivision_stats,
    unit_cut_line,
)
from splinegeom.errors import CapacityError, InputError, StructuralError, UnsupportedError
from splinegeom.network import DenseLayer, GeneratorConfig, MasoLayer, Network, forward, random_network, region_code, region_codes
from splinegeom.power import subdivided_pd

SQUARE = ConvexPolygon.box(0, 0, 1, 1)
DOMAIN = ConvexPolygon.box(-1, -1, 1, 1)
QUADRANTS = Network([DenseLayer(np.eye(2), np.zeros(2), "relu")])


def codes_of(part, ids):
    return [part.cells[i].codes for i in ids]


class TestClip:
    def test_half(self):
        out = clip_halfplane(SQUARE, Line2D([1, 0], -0.5), 1)
        assert out.area == pytest.approx(0.5)
        assert out.bounds == pytest.approx((0.5, 0, 1, 1))

    def test_empty(self):
        assert clip_halfplane(SQUARE, Line2D([1, 0], -2), 1) is None

    def test_diagonal(self):
        out = clip_halfplane(SQUARE, Line2D([1, -1], 0), 1)
        assert out.area == pytest.approx(0.5)
        assert len(out.vertices) == 3
        assert out.is_convex()

    def test_ccw_output(self):
        out = clip_halfplane(SQUARE, Line2D([1, 1], -0.5), -1)
        assert out.area > 0


class TestSplit:
    def test_square_halves(self):
        neg, pos = split_by_line(SQUARE, Line2D([1, 0], -0.5))
        assert neg.area == pytest.approx(0.5) and pos.area == pytest.approx(0.5)

    def test_miss(self):
        neg, pos = split_by_line(SQUARE, Line2D([1, 0], 3.0))
        assert neg is None and pos is SQUARE

    def test_sliver_absorbed(self):
        neg, pos = split_by_line(SQUARE, Line2D([1, 1], -1e-7))
        assert neg is None and pos is SQUARE

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=9, max_size=9))
    def test_area_conservation(self, vals):
        tri = np.array(vals[:6]).reshape(3, 2)
        u, v = tri[1] - tri[0], tri[2] - tri[0]
        area = abs(u[0] * v[1] - u[1] * v[0]) / 2
        assume(area > 1e-3)
        assume(abs(vals[6]) + abs(vals[7]) > 1e-3)
        poly = ConvexPolygon(tri)
        neg, pos = split_by_line(poly, Line2D(vals[6:8], vals[8]))
        total = sum(p.area for p in (neg, pos) if p is not None)
        assert total == pytest.approx(poly.area, rel=1e-9)
        for p in (neg, pos):
            if p is not None:
                assert p.is_convex(1e-9)


class TestUnitCutLine:
    def test_first_layer_is_preactivation(self):
        net = Network([DenseLayer([[2.0, -1.0]], [0.3], "relu")])
        line = unit_cut_line(net, root_cell(DOMAIN), 1, 1)
        np.testing.assert_allclose(line.normal, [2, -1])
        assert line.offset == pytest.approx(0.3)

    def test_second_layer_points_vanish(self, rng):
        net = random_network(GeneratorConfig((2, 4, 3, 1), "relu", seed=3))
        cells, _ = subdivide(net, [root_cell(DOMAIN)], 1)
        w, b2 = net.layers[1].A[:, 0], net.layers[1].B[:, 0]
        checked = 0
        for cell in cells:
            for k in range(1, 4):
                line = unit_cut_line(net, cell, 2, k)
                if line is None:
                    continue
                a = line.normal
                p0 = -line.offset * a / (a @ a)
                for t in rng.uniform(-1, 1, 10):
                    x = p0 + t * np.array([-a[1], a[0]])
                    assert abs(w[k - 1] @ cell.affine(x) + b2[k - 1]) <= 1e-10
                    checked += 1
        assert checked > 0

    def test_degenerate_is_none(self):
        net = Network([DenseLayer(np.eye(2), [-5.0, -5.0], "relu"), DenseLayer([[1.0, 1.0]], [0.5], "relu")])
        cells, _ = subdivide(net, [root_cell(DOMAIN)], 1)
        assert unit_cut_line(net, cells[0], 2, 1) is None

    def test_unsupported(self):
        net = Network([MasoLayer(np.zeros((1, 3, 2)), np.zeros((1, 3)))])
        with pytest.raises(UnsupportedError):
            unit_cut_line(net, root_cell(DOMAIN), 1, 1)


class TestEnumerate:
    def test_quadrants(self):
        part = enumerate_partition(QUADRANTS, DOMAIN)
        assert len(part) == 4
        assert {c.codes[0] for c in part.cells} == {(1, 1), (1, 2), (2, 1), (2, 2)}

    def test_quadrant_stats(self):
        st_ = subdivision_stats(enumerate_partition(QUADRANTS, DOMAIN))
        assert st_.crossings == [[1, 2]]
        assert st_.cells_per_depth == [1, 4]
        assert st_.identity_holds()

    def test_dense_grid_oracle(self):
        net = random_network(GeneratorConfig((2, 6, 6, 1), "relu", seed=5))
        part = enumerate_partition(net, DOMAIN, 2)
        X = grid()
        ids, amb = part.locate_many(X)
        ok = ids >= 0
        assert ok.mean() > 0.99
        want = region_codes(net, X[ok])
        got = np.array([sum((list(c) for c in part.cells[i].codes), []) for i in ids[ok]])
        np.testing.assert_array_equal(got, np.concatenate(want[:2], axis=1))

    @pytest.mark.parametrize("seed", range(5))
    def test_count_identity_and_bound(self, seed):
        part = enumerate_partition(mixed_net(seed), DOMAIN)
        st_ = part.stats
        assert st_.identity_holds() and st_.monotone()
        assert st_.cells_per_depth[-1] <= st_.upper_bounds()[-1]
        assert st_.bounds_hold()

    def test_tiling(self, rng):
        net = mixed_net(3)
        part = enumerate_partition(net, DOMAIN)
        assert part.total_area() == pytest.approx(DOMAIN.area, rel=1e-6)
        X = rng.uniform(-1, 1, (10_000, 2))
        hits = np.zeros(len(X), dtype=int)
        for cell in part.cells:
            n, c = cell.polygon.halfplanes()
            hits += np.all(X @ n.T + c > EDGE_EPS, axis=1)
        _, amb = part.locate_many(X)
        assert np.all((hits == 1) | amb)

    def test_affine_exactness(self, rng):
        net = mixed_net(4)
        part = enumerate_partition(net, DOMAIN)
        for cell in part.cells:
            v = cell.polygon.vertices
            for w in rng.dirichlet(np.ones(len(v)), 3):
                x = w @ v
                f = forward(net, x)[-1]
                np.testing.assert_allclose(cell.affine(x), f, rtol=1e-9, atol=1e-9)

    def test_centroid_radius_match_subdivided_pd(self):
        net = mixed_net(1)
        part = enumerate_partition(net, DOMAIN, 2)
        for cell in part.cells:
            mu, rad = subdivided_pd(net, cell.codes[:1], 2).entry(cell.codes[1])
            np.testing.assert_allclose(cell.centroid, mu, atol=1e-12)
            assert cell.radius == pytest.approx(rad, abs=1e-12)

    def test_cut_paths_do_not_dead_end(self):
        net = mixed_net(2)
        part = enumerate_partition(net, DOMAIN, 2)
        by_unit = defaultdict(list)
        for c in part.cuts:
            by_unit[(c.depth, c.unit)].append(c)
        dn, dc = DOMAIN.halfplanes()
        for segs in by_unit.values():
            P = np.array([s.p0 for s in segs] + [s.p1 for s in segs])
            for i, p in enumerate(P):
                if np.min(np.abs(dn @ p + dc)) <= 1e-9:
                    continue
                others = np.delete(P, i, axis=0)
                assert np.min(np.linalg.norm(others - p, axis=1)) <= 1e-9

    def test_axis_aligned_boundaries(self):
        net = random_network(GeneratorConfig((2, 5, 1), "relu", "axis_aligned", seed=8))
        part = enumerate_partition(net, ConvexPolygon.box(-3, -3, 3, 3), 1)
        assert part.cuts
        for c in part.cuts:
            d = c.p1 - c.p0
            assert min(abs(d[0]), abs(d[1])) <= 1e-12 * np.linalg.norm(d)

    def test_unit_order_independence(self):
        net = random_network(GeneratorConfig((2, 5, 4, 1), "relu", seed=6))
        perm = np.array([3, 0, 4, 2, 1])
        l1, l2, l3 = (l.source for l in net.layers)
        permuted = Network([DenseLayer(l1.W[perm], l1.b[perm], l1.act), DenseLayer(l2.W[:, perm], l2.b, l2.act), l3])
        a = enumerate_partition(net, DOMAIN, 2)
        b = enumerate_partition(permuted, DOMAIN, 2)
        inv = np.argsort(perm)
        codes_b = {(tuple(np.array(c.codes[0])[inv]), c.codes[1]) for c in b.cells}
        assert {c.codes for c in a.cells} == codes_b

    def test_cap(self):
        with pytest.raises(CapacityError):
            enumerate_partition(mixed_net(0), DOMAIN, cell_cap=3)

    def test_depth_out_of_range(self):
        with pytest.raises(StructuralError):
            enumerate_partition(QUADRANTS, DOMAIN, 2)

    def test_needs_2d(self):
        with pytest.raises(StructuralError):
            enumerate_partition(random_network(GeneratorConfig((3, 2, 1), seed=0)), DOMAIN)


class TestLocate:
    part = enumerate_partition(QUADRANTS, DOMAIN)

    def test_quadrant(self):
        loc = self.part.locate([0.3, -0.7])
        assert not loc.ambiguous and self.part.cells[loc.cell].codes == ((1, 2),)

    def test_on_cut(self):
        loc = self.part.locate([0.0, 0.5])
        assert loc.ambiguous and loc.cell is None
        assert sorted(self.part.cells[i].codes[0] for i in loc.candidates) == [(1, 1), (2, 1)]

    def test_domain_edge_not_ambiguous(self):
        assert not self.part.locate([1.0, 0.5]).ambiguous

    def test_outside(self):
        with pytest.raises(InputError):
            self.part.locate([2.0, 0.0])

    def test_random_agreement(self, rng):
        net = mixed_net(7)
        part = enumerate_partition(net, DOMAIN)
        for x in rng.uniform(-1, 1, (1000, 2)):
            loc = part.locate(x)
            if not loc.ambiguous:
                assert part.cells[loc.cell].codes == region_code(net, x)
