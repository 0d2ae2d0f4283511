"""Shared fixtures: small hand-checkable graphs and a tiny synthetic dataset."""

import numpy as np
import pytest

from msgwnn.graph import Graph, lattice_adjacency, path_adjacency
from msgwnn.synthdata import SynthSpec, generate, split


def random_connected_graph(n: int, rng: np.random.Generator, density: float = 0.2, channels: int = 3) -> Graph:
    """Path backbone plus random chords; connected by construction."""
    adjacency = path_adjacency(n)
    extra = np.triu(rng.random((n, n)) < density, k=2)
    adjacency = np.maximum(adjacency, (extra | extra.T).astype(float))
    return Graph(n=n, adjacency=adjacency, embeddings=rng.normal(size=(n, channels)))


@pytest.fixture
def k2():
    return Graph(n=2, adjacency=np.array([[0.0, 1.0], [1.0, 0.0]]), embeddings=np.array([[1.0], [0.0]]))


@pytest.fixture
def path3():
    return Graph(n=3, adjacency=path_adjacency(3), embeddings=np.eye(3))


@pytest.fixture
def path9():
    return Graph(n=9, adjacency=path_adjacency(9), embeddings=np.ones((9, 1)))


@pytest.fixture
def grid8():
    return Graph(n=64, adjacency=lattice_adjacency(8, 8), embeddings=np.ones((64, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_graph(rng):
    """N = 6 graph with self-loops and 3 embedding channels."""
    adjacency = lattice_adjacency(2, 3) + np.eye(6)
    return Graph(n=6, adjacency=adjacency, embeddings=rng.normal(size=(6, 3)))


@pytest.fixture(scope="session")
def tiny_spec():
    return SynthSpec(height=4, width=4, classes=2, blob_scales=(1, 2), samples_per_class=6, seed=3)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_spec):
    return generate(tiny_spec)


@pytest.fixture(scope="session")
def tiny_split(tiny_dataset):
    return split(tiny_dataset, 0.5, seed=3)
