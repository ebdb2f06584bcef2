import numpy as np
import pytest

from splinegeom.network import DenseLayer, GeneratorConfig, Network, forward, random_network


def centered(net: Network, lo=-1.0, hi=1.0, n=41) -> Network:
    """Shift the read-out bias so a boundary crosses the grid.

    The shift is the median of the distinct logit values, so a flat region
    (all units dead) never ends up exactly on the zero level.
    """
    g = np.linspace(lo, hi, n)
    X = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    f = forward(net, X)[-1][:, 0]
    layers = [l.source for l in net.layers]
    last = layers[-1]
    layers[-1] = DenseLayer(last.W, last.b - np.median(np.unique(f)), last.act)
    return Network(layers, input_dim=net.input_dim, meta=net.meta)


def mixed_net(seed: int, bias_scale: float = 0.5) -> Network:
    """2 -> {3..6} -> {3..6} -> 1 with activations drawn from relu / leaky / abs."""
    rng = np.random.default_rng(1000 + seed)
    dims = (2, int(rng.integers(3, 7)), int(rng.integers(3, 7)), 1)
    acts = tuple(rng.choice(["relu", "leaky_relu", "abs"], size=2))
    return centered(random_network(GeneratorConfig(dims, acts, seed=seed, eta=0.2, bias_scale=bias_scale)))


def grid(lo=-1.0, hi=1.0, n=200) -> np.ndarray:
    g = np.linspace(lo, hi, n)
    return np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
