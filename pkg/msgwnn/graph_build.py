"""
Turn a patch-feature grid into a Graph via dot-product similarity and
percentile thresholding.

The default embedder is a statistics-based stand-in for a convolutional
backbone; any callable with the ``PatchEmbedder`` signature can replace it.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Protocol, Union

import numpy as np

from msgwnn.errors import DimensionMismatch, NotDivisible, ValidationError
from msgwnn.graph import Graph

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 99.0
DEFAULT_PATCH = 16
# ITU-R BT.601 luma weights
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class FeatureGrid:
    """H' x W' grid of C_1-dimensional node features, row-major node order."""

    height: int
    width: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != self.height * self.width:
            raise DimensionMismatch(
                f"grid {self.height}x{self.width} needs {self.height * self.width} rows, "
                f"got values of shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("feature grid contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.height * self.width

    @property
    def channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class SimilarityParams:
    """Projections theta(.) and phi(.) (1x1 convolutions on the grid)."""

    theta_weight: np.ndarray
    phi_weight: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta_weight, dtype=np.float64)
        phi = np.asarray(self.phi_weight, dtype=np.float64)
        if theta.ndim != 2 or theta.shape != phi.shape:
            raise DimensionMismatch(
                f"theta {theta.shape} and phi {phi.shape} must be matching C1 x Cp matrices"
            )
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
            raise ValidationError("similarity weights must be finite")
        object.__setattr__(self, "theta_weight", theta)
        object.__setattr__(self, "phi_weight", phi)

    @classmethod
    def identity(cls, channels: int) -> "SimilarityParams":
        return cls(theta_weight=np.eye(channels), phi_weight=np.eye(channels))

    @classmethod
    def random(
        cls, channels: int, rng: np.random.Generator, projection: Optional[int] = None
    ) -> "SimilarityParams":
        projection = projection or channels
        bound = 1.0 / math.sqrt(channels)
        return cls(
            theta_weight=rng.uniform(-bound, bound, size=(channels, projection)),
            phi_weight=rng.uniform(-bound, bound, size=(channels, projection)),
        )


@dataclass(frozen=True)
class EdgeRule:
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0 < self.alpha <= 100:
            raise ValidationError(f"alpha must lie in (0, 100], got {self.alpha}")


class PatchEmbedder(Protocol):
    """Maps a (H', W', r, r, 3) block of patches to a (H' * W', C_1) matrix."""

    def __call__(self, patches: np.ndarray) -> np.ndarray: ...


class StatisticsEmbedder:
    """Channel means, channel standard deviations and 2x2 pooled luminance (C_1 = 10)."""

    channels = 10

    def __call__(self, patches: np.ndarray) -> np.ndarray:
        rows, cols, r = patches.shape[0], patches.shape[1], patches.shape[2]
        pixels = patches.astype(np.float64) / 255.0
        means = pixels.mean(axis=(2, 3))
        stds = pixels.std(axis=(2, 3))
        luminance = pixels @ LUMA
        # overlapping halves when r is odd, so r = 1 still yields four cells
        top, bottom = slice(0, (r + 1) // 2), slice(r // 2, r)
        pooled = [
            luminance[:, :, vertical, horizontal].mean(axis=(2, 3))
            for vertical in (top, bottom)
            for horizontal in (top, bottom)
        ]
        features = np.concatenate([means, stds, np.stack(pooled, axis=-1)], axis=-1)
        return features.reshape(rows * cols, self.channels)


def patch_embed(
    image: np.ndarray, patch: int = DEFAULT_PATCH, embedder: Optional[PatchEmbedder] = None
) -> FeatureGrid:
    """Split an H x W x 3 byte image into r x r patches and embed each one."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionMismatch(f"expected an H x W x 3 image, got shape {image.shape}")
    height, width = image.shape[:2]
    if patch < 1 or height % patch or width % patch:
        raise NotDivisible(height, width, patch)

    rows, cols = height // patch, width // patch
    patches = image.reshape(rows, patch, cols, patch, 3).transpose(0, 2, 1, 3, 4)
    embedder = embedder or StatisticsEmbedder()
    return FeatureGrid(height=rows, width=cols, values=embedder(patches))


def embedding_similarity(values: np.ndarray, params: SimilarityParams) -> np.ndarray:
    """f(x_i, x_j) = theta(x_i)^T phi(x_j) for the rows of an N x C_1 matrix."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or params.theta_weight.shape[0] != values.shape[1]:
        raise DimensionMismatch(
            f"projections expect {params.theta_weight.shape[0]} channels, features have shape {values.shape}"
        )
    return (values @ params.theta_weight) @ (values @ params.phi_weight).T


def similarity_matrix(grid: FeatureGrid, params: SimilarityParams) -> np.ndarray:
    """Pairwise similarities of grid nodes; not symmetric in general."""
    return embedding_similarity(grid.values, params)


def percentile_nearest_rank(values: np.ndarray, alpha: float) -> float:
    """Value at 1-based rank ceil(alpha / 100 * M) of the ascending-sorted entries."""
    ordered = np.sort(np.asarray(values, dtype=np.float64), axis=None)
    rank = math.ceil(Fraction(str(alpha)) * ordered.size / 100)
    return float(ordered[max(rank, 1) - 1])


def threshold_edges(sim: np.ndarray, rule: EdgeRule) -> np.ndarray:
    """Binary symmetric adjacency: e_ij = 1 iff i = j or f(x_i, x_j) >= Q_alpha (OR-symmetrised)."""
    sim = np.asarray(sim, dtype=np.float64)
    if sim.ndim != 2 or sim.shape[0] != sim.shape[1]:
        raise DimensionMismatch(f"similarity must be square, got {sim.shape}")
    if not np.all(np.isfinite(sim)):
        raise ValidationError("similarity matrix contains non-finite values")
    q_alpha = percentile_nearest_rank(sim, rule.alpha)
    logger.debug("Q_%g = %.6g over %d entries", rule.alpha, q_alpha, sim.size)
    edges = sim >= q_alpha
    edges = edges | edges.T
    np.fill_diagonal(edges, True)
    return edges.astype(np.float64)


def build_graph(
    source: Union[np.ndarray, FeatureGrid],
    params: Optional[SimilarityParams] = None,
    rule: Optional[EdgeRule] = None,
    patch: int = DEFAULT_PATCH,
    embedder: Optional[PatchEmbedder] = None,
) -> Graph:
    """Image (or feature grid) to Graph with percentile-rule topology."""
    grid = source if isinstance(source, FeatureGrid) else patch_embed(source, patch, embedder)
    params = params or SimilarityParams.identity(grid.channels)
    rule = rule or EdgeRule()
    adjacency = threshold_edges(similarity_matrix(grid, params), rule)
    graph = Graph(n=grid.n, adjacency=adjacency, embeddings=grid.values)
    logger.info("built graph: %d nodes, %d edges (alpha=%g)", graph.n, graph.edge_count, rule.alpha)
    return graph


# Binary PPM (P6) images


def _ppm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError("truncated PPM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    """Read a binary P6 image with maxval 255 as an H x W x 3 uint8 array."""
    data = Path(path).read_bytes()
    tokens, offset = _ppm_tokens(data, 4)
    if tokens[0] != b"P6":
        raise ValidationError(f"{path}: only binary PPM (P6) is supported")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValidationError(f"{path}: maxval {maxval} unsupported, expected 255")
    if len(data) - offset < width * height * 3:
        raise ValidationError(f"{path}: raster shorter than {width}x{height} pixels")
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=offset)
    return raster.reshape(height, width, 3).copy()


def write_ppm(image: np.ndarray, path: Union[str, Path]) -> None:
    image = np.asarray(image, dtype=np.uint8)
    height, width = image.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())
