import itertools

import numpy as np
import pytest

from splinegeom.errors import CapacityError, StructuralError
from splinegeom.network import Activation, DenseLayer, GeneratorConfig, Network, lift_layer, random_network, region_code
from splinegeom.power import (
    PowerDiagram,
    laguerre_infer,
    laguerre_infer_batch,
    layer_pd,
    naive_joint_infer,
    naive_joint_infer_batch,
    structured_infer,
    subdivided_pd,
    unit_pd,
)


def _layer(K, D, act="relu", seed=0):
    rng = np.random.default_rng(seed)
    return lift_layer(DenseLayer(rng.standard_normal((K, D)), rng.standard_normal(K), act))


class TestUnitPD:
    def test_relu_unit(self):
        pd = unit_pd(lift_layer(DenseLayer([[1.0, 0.0]], [0.0], "relu")), 1)
        np.testing.assert_array_equal(pd.centroids, [[1, 0], [0, 0]])
        np.testing.assert_array_equal(pd.radii, [1, 0])

    def test_radius_formula(self):
        pd = unit_pd(lift_layer(DenseLayer([[1.0, 1.0]], [0.5], "relu")), 1)
        assert pd.radii[0] == 3.0

    @pytest.mark.parametrize("act", ["relu", "abs", "leaky_relu"])
    def test_laguerre_equals_affine_argmax(self, rng, act):
        activation = Activation(act, 0.3 if act == "leaky_relu" else None)
        layer = lift_layer(DenseLayer(rng.standard_normal((3, 2)), rng.standard_normal(3), activation))
        X = rng.uniform(-3, 3, (1000, 2))
        for k in range(1, 4):
            pd = unit_pd(layer, k)
            expected = np.argmax(layer.projections(X)[:, k - 1], axis=1)
            np.testing.assert_array_equal(laguerre_infer_batch(pd, X), expected)

    def test_bad_unit(self):
        with pytest.raises(StructuralError):
            unit_pd(_layer(2, 2), 3)


class TestLayerPD:
    identity_layer = lift_layer(DenseLayer(np.eye(2), np.zeros(2), "relu"))

    def test_identity_weight_centroids(self):
        pd = layer_pd(self.identity_layer)
        np.testing.assert_array_equal(pd.entry((1, 1))[0], [1, 1])
        np.testing.assert_array_equal(pd.entry((2, 2))[0], [0, 0])
        assert pd.entry((1, 1))[1] == 2.0

    def test_two_unit_pairwise_formula(self):
        layer = _layer(2, 3, seed=5)
        pd = layer_pd(layer)
        A, B = layer.A, layer.B
        for i, j in itertools.product(range(2), repeat=2):
            expanded = A[0, i] @ A[0, i] + 2 * B[0, i] + A[1, j] @ A[1, j] + 2 * B[1, j] + 2 * A[0, i] @ A[1, j]
            mu, rad = pd.entry((i + 1, j + 1))
            np.testing.assert_allclose(mu, A[0, i] + A[1, j], rtol=1e-14)
            assert rad == pytest.approx(expanded, rel=1e-12)

    def test_argmin_equals_per_unit_argmax(self, rng):
        layer = _layer(3, 4, "abs", seed=2)
        X = rng.standard_normal((1000, 4))
        np.testing.assert_array_equal(naive_joint_infer_batch(layer, X), structured_infer(layer, X))

    def test_cap(self):
        with pytest.raises(CapacityError, match="4096"):
            layer_pd(_layer(12, 3), max_codes=4000)


class TestSubdividedPD:
    def test_empty_prefix_is_layer_pd(self):
        net = random_network(GeneratorConfig((3, 4, 3, 1), "relu", seed=4))
        a, b = subdivided_pd(net, (), 1), layer_pd(net.layers[0])
        np.testing.assert_allclose(a.centroids, b.centroids, atol=1e-12)
        np.testing.assert_allclose(a.radii, b.radii, atol=1e-12)
        assert a.code_labels == b.code_labels

    def test_affine_preceded_layer(self, rng):
        G, h = rng.standard_normal((3, 2)), rng.standard_normal(3)
        relu = DenseLayer(rng.standard_normal((2, 3)), rng.standard_normal(2), "relu")
        net = Network([DenseLayer(G, h, "identity"), relu])
        pd = subdivided_pd(net, ((1, 1, 1),), 2)
        layer = net.layers[1]
        for code in pd.code_labels:
            mu2 = sum(layer.A[k, code[k] - 1] for k in range(2))
            off = sum(layer.B[k, code[k] - 1] for k in range(2))
            mu, rad = pd.entry(code)
            np.testing.assert_allclose(mu, G.T @ mu2, rtol=1e-12)
            # same centroid/offset bookkeeping with the opposite radius sign convention
            other_convention = -(G.T @ mu2) @ (G.T @ mu2) - 2 * mu2 @ h - 2 * off
            assert rad == pytest.approx(-other_convention, rel=1e-12)

    def test_active_code_all_relu_centroid(self):
        G = np.array([[1.0, 2.0], [0.0, 1.0], [1.0, -1.0]])
        net = Network([DenseLayer(G, np.zeros(3), "identity"), DenseLayer(np.eye(3)[:2], np.zeros(2), "relu")])
        mu, _ = subdivided_pd(net, ((1, 1, 1),), 2).entry((1, 1))
        np.testing.assert_allclose(mu, G.T @ np.array([1.0, 1.0, 0.0]))

    @pytest.mark.parametrize("seed", range(3))
    def test_sampled_points_agree_with_region_code(self, rng, seed):
        net = random_network(GeneratorConfig((2, 5, 4, 1), ("relu", "abs"), seed=seed))
        for x in rng.uniform(-1, 1, (200, 2)):
            codes = region_code(net, x)
            pd = subdivided_pd(net, codes[:1], 2)
            assert pd.code_labels[laguerre_infer(pd, x)] == codes[1]

    def test_prefix_length(self):
        net = random_network(GeneratorConfig((2, 3, 1), "relu", seed=0))
        with pytest.raises(StructuralError):
            subdivided_pd(net, (), 2)


class TestLaguerreInfer:
    pd = PowerDiagram([[0.0, 0.0], [2.0, 0.0]], [0.0, 0.0])

    def test_nearest(self):
        assert laguerre_infer(self.pd, [0.5, 0.0]) == 0

    def test_radius_dominates(self):
        assert laguerre_infer(PowerDiagram(self.pd.centroids, [0.0, 10.0]), [0.5, 0.0]) == 1

    def test_tie_smallest_index(self):
        assert laguerre_infer(self.pd, [1.0, 0.0]) == 0

    def test_global_shift_invariance(self, rng):
        pd = PowerDiagram(rng.standard_normal((6, 2)), rng.standard_normal(6))
        X = rng.uniform(-2, 2, (100, 2))
        np.testing.assert_array_equal(laguerre_infer_batch(pd, X), laguerre_infer_batch(pd.shifted(17.0), X))

    def test_empty(self):
        with pytest.raises(StructuralError):
            laguerre_infer(PowerDiagram(np.zeros((0, 2)), np.zeros(0)), [0.0, 0.0])


class TestNaiveJointInfer:
    def test_single_unit(self, rng):
        layer = _layer(1, 2)
        for x in rng.standard_normal((20, 2)):
            assert naive_joint_infer(layer, x) == tuple(structured_infer(layer, x)[0])

    def test_twelve_units(self, rng):
        layer = _layer(12, 6, seed=3)
        X = rng.standard_normal((1000, 6))
        np.testing.assert_array_equal(naive_joint_infer_batch(layer, X), structured_infer(layer, X))

    def test_cap(self):
        with pytest.raises(CapacityError):
            naive_joint_infer(_layer(5, 2), [0.0, 0.0], cap=16)
