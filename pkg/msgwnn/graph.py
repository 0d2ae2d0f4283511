"""
Graph data structures, validation, degree and normalized-Laplacian computation.

Graphs are stored dense (N x N adjacency) with a sparse CSR view for the
Chebyshev path. All arrays are read-only after construction.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import scipy.sparse
from scipy.sparse.csgraph import shortest_path

from msgwnn.errors import InvalidGraph, NodeOutOfRange, ZeroDegreeNode

logger = logging.getLogger(__name__)

GRAPH_FORMAT = 1


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph G = {V, E, H} with node embedding matrix H."""

    n: int
    adjacency: np.ndarray
    embeddings: np.ndarray

    def __post_init__(self):
        adjacency = _frozen(self.adjacency)
        embeddings = _frozen(self.embeddings)
        if embeddings.ndim == 1:
            embeddings = _frozen(embeddings.reshape(-1, 1))
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "embeddings", embeddings)

        if self.n < 1:
            raise InvalidGraph(f"graph needs at least one node, got n={self.n}")
        if adjacency.shape != (self.n, self.n):
            raise InvalidGraph(f"adjacency shape {adjacency.shape} does not match n={self.n}")
        if embeddings.ndim != 2 or embeddings.shape[0] != self.n:
            raise InvalidGraph(
                f"embeddings shape {embeddings.shape} needs {self.n} rows"
            )
        if not np.all(np.isfinite(adjacency)) or not np.all(np.isfinite(embeddings)):
            raise InvalidGraph("adjacency and embeddings must be finite")
        if not np.array_equal(adjacency, adjacency.T):
            raise InvalidGraph("adjacency is not symmetric")
        if np.any(adjacency < 0):
            raise InvalidGraph("adjacency has negative entries")
        diagonal = np.diag(adjacency)
        if not np.all((diagonal == 0) | (diagonal == 1)):
            raise InvalidGraph("self-loop weights must be 0 or 1")

    @property
    def channels(self) -> int:
        return self.embeddings.shape[1]

    @property
    def edge_count(self) -> int:
        """Number of undirected edges, self-loops included."""
        return int(np.count_nonzero(np.triu(self.adjacency)))

    def sparse_adjacency(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.csr_matrix(self.adjacency)

    def permuted(self, order: np.ndarray) -> "Graph":
        """Relabel nodes so that new node ``i`` is old node ``order[i]``."""
        order = np.asarray(order)
        return Graph(
            n=self.n,
            adjacency=self.adjacency[np.ix_(order, order)],
            embeddings=self.embeddings[order],
        )

    def with_embeddings(self, embeddings: np.ndarray) -> "Graph":
        return Graph(n=self.n, adjacency=self.adjacency, embeddings=embeddings)


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    matrix: np.ndarray
    kind: str = "normalized"

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def sparse(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.csr_matrix(self.matrix)


def degree_matrix(g: Graph) -> np.ndarray:
    """Diagonal of D as an N-vector: D_ii = sum_j A_ij."""
    return g.adjacency.sum(axis=1)


def normalized_laplacian(g: Graph) -> LaplacianMatrix:
    """L = I - D^{-1/2} A D^{-1/2}."""
    degree = degree_matrix(g)
    isolated = np.flatnonzero(degree <= 0)
    if isolated.size:
        raise ZeroDegreeNode(int(isolated[0]))
    inv_sqrt = 1.0 / np.sqrt(degree)
    matrix = np.eye(g.n) - inv_sqrt[:, None] * g.adjacency * inv_sqrt[None, :]
    # exact symmetry for the eigensolver
    matrix = 0.5 * (matrix + matrix.T)
    return LaplacianMatrix(matrix=matrix)


def path_adjacency(n: int) -> np.ndarray:
    """Unit-weight path 0 - 1 - ... - (n-1), no self-loops."""
    adjacency = np.zeros((n, n))
    idx = np.arange(n - 1)
    adjacency[idx, idx + 1] = 1.0
    adjacency[idx + 1, idx] = 1.0
    return adjacency


def lattice_adjacency(height: int, width: int) -> np.ndarray:
    """4-neighbour grid in row-major node order (node id = row * width + col)."""
    n = height * width
    adjacency = np.zeros((n, n))
    for row in range(height):
        for col in range(width):
            node = row * width + col
            if col + 1 < width:
                adjacency[node, node + 1] = adjacency[node + 1, node] = 1.0
            if row + 1 < height:
                adjacency[node, node + width] = adjacency[node + width, node] = 1.0
    return adjacency


def hop_distances(g: Graph, center: int) -> np.ndarray:
    """Unweighted hop count from ``center`` to every node (inf when unreachable)."""
    if not 0 <= center < g.n:
        raise NodeOutOfRange(center, g.n)
    return shortest_path(g.sparse_adjacency(), unweighted=True, directed=False, indices=center)


# JSON / CSV interchange


def graph_to_dict(g: Graph, embeddings_ref: Optional[str] = None) -> Dict:
    """Serialise to the graph JSON schema; edges are listed once per unordered pair."""
    rows, cols = np.nonzero(np.triu(g.adjacency))
    edges = [[int(i), int(j), float(g.adjacency[i, j])] for i, j in zip(rows, cols)]
    return {
        "format": GRAPH_FORMAT,
        "n": g.n,
        "edges": edges,
        "embeddings": embeddings_ref if embeddings_ref is not None else g.embeddings.tolist(),
    }


def graph_from_dict(data: Dict, base_dir: Union[str, Path, None] = None) -> Graph:
    try:
        n = int(data["n"])
        edges = data["edges"]
        embeddings = data["embeddings"]
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidGraph(f"malformed graph document: {e}") from e

    adjacency = np.zeros((n, n))
    for edge in edges:
        if len(edge) != 3:
            raise InvalidGraph(f"edge entries must be [i, j, w], got {edge}")
        i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidGraph(f"edge ({i}, {j}) references a node outside 0..{n - 1}")
        adjacency[i, j] = w
        adjacency[j, i] = w

    if isinstance(embeddings, str):
        csv_path = Path(embeddings)
        if not csv_path.is_absolute() and base_dir is not None:
            csv_path = Path(base_dir) / csv_path
        embeddings = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    return Graph(n=n, adjacency=adjacency, embeddings=np.asarray(embeddings, dtype=np.float64))


def load_graph(path: Union[str, Path]) -> Graph:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return graph_from_dict(data, base_dir=path.parent)


def save_graph(g: Graph, path: Union[str, Path], embeddings_csv: bool = False) -> None:
    """Write ``g`` as JSON; with ``embeddings_csv`` the matrix goes to a sibling CSV."""
    path = Path(path)
    ref = None
    if embeddings_csv:
        csv_path = path.with_suffix(".embeddings.csv")
        np.savetxt(csv_path, g.embeddings, delimiter=",", fmt="%.17g")
        ref = csv_path.name
    with open(path, "w", encoding="utf-8") as f:
        json.dump(graph_to_dict(g, ref), f, indent=2)
    logger.debug("wrote graph with %d nodes to %s", g.n, path)
