"""
GWNN layers (feature transformation followed by a diagonal-kernel wavelet
convolution), the three-layer GWNN, and the GCN baseline.

Wavelet operators enter the network through propagators: a dense pair of
matrices in exact mode, or an order-k Chebyshev recurrence on the sparse
rescaled Laplacian in chebyshev mode. Both are constant within a step; only
layer weights and kernels are trainable.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from msgwnn.errors import DimensionMismatch, InvalidModel
from msgwnn.graph import Graph, normalized_laplacian
from msgwnn.spectral import (
    FORWARD,
    INVERSE,
    NORMALIZED_SPECTRUM_BOUND,
    chebyshev_fit,
    chebyshev_recurrence,
    eigendecompose,
    wavelet_basis_exact,
)

logger = logging.getLogger(__name__)

DTYPE = torch.float64
DEFAULT_HIDDEN = (256, 128)
EXACT = "exact"
CHEBYSHEV = "chebyshev"
ACTIVATIONS = ("relu", "softmax", "none")


class WaveletPropagator:
    """Applies Psi_s^{-1} (analysis) and Psi_s (synthesis) to N x q tensors."""

    n: int

    def analysis(self, x: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def synthesis(self, x: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError


class DenseWaveletPropagator(WaveletPropagator):
    def __init__(self, forward: np.ndarray, inverse: np.ndarray):
        self.forward = torch.tensor(np.asarray(forward), dtype=DTYPE)
        self.inverse = torch.tensor(np.asarray(inverse), dtype=DTYPE)
        self.n = self.forward.shape[0]

    def analysis(self, x: torch.Tensor) -> torch.Tensor:
        return self.inverse @ x

    def synthesis(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward @ x


class ChebyshevWaveletPropagator(WaveletPropagator):
    """Independent order-k expansions of Psi_s and Psi_s^{-1}, O(k |E|) per column."""

    def __init__(self, graph: Graph, scale: float, k: int, lambda_max: float = NORMALIZED_SPECTRUM_BOUND):
        laplacian = normalized_laplacian(graph)
        lhat = (2.0 / lambda_max) * laplacian.matrix - np.eye(graph.n)
        rows, cols = np.nonzero(lhat)
        self.lhat = torch.sparse_coo_tensor(
            torch.as_tensor(np.stack([rows, cols])),
            torch.as_tensor(lhat[rows, cols], dtype=DTYPE),
            size=(graph.n, graph.n),
        ).coalesce()
        self.forward_coefficients = chebyshev_fit(scale, FORWARD, k, lambda_max).coefficients
        self.inverse_coefficients = chebyshev_fit(scale, INVERSE, k, lambda_max).coefficients
        self.n = graph.n

    def _apply(self, coefficients: np.ndarray, x: torch.Tensor) -> torch.Tensor:
        return chebyshev_recurrence(coefficients, lambda v: torch.sparse.mm(self.lhat, v), x)

    def analysis(self, x: torch.Tensor) -> torch.Tensor:
        return self._apply(self.inverse_coefficients, x)

    def synthesis(self, x: torch.Tensor) -> torch.Tensor:
        return self._apply(self.forward_coefficients, x)


def wavelet_propagator(graph: Graph, scale: float, mode: str = CHEBYSHEV, k: int = 2) -> WaveletPropagator:
    if mode == EXACT:
        pair = wavelet_basis_exact(eigendecompose(normalized_laplacian(graph)), scale)
        return DenseWaveletPropagator(pair.forward, pair.inverse)
    if mode == CHEBYSHEV:
        return ChebyshevWaveletPropagator(graph, scale, k)
    raise InvalidModel(f"unknown operator mode {mode!r}; expected '{EXACT}' or '{CHEBYSHEV}'")


def gcn_propagation(graph: Graph) -> torch.Tensor:
    """D~^{-1/2} A~ D~^{-1/2}, A~ = A with a unit self-loop added where the diagonal is zero.

    When every node already has a self-loop the result is I - L for the
    normalized Laplacian of ``graph``.
    """
    a_tilde = graph.adjacency + np.diag((np.diag(graph.adjacency) == 0).astype(np.float64))
    inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return torch.as_tensor(inv_sqrt[:, None] * a_tilde * inv_sqrt[None, :], dtype=DTYPE)


def _activate(x: torch.Tensor, activation: str) -> torch.Tensor:
    if activation == "relu":
        return torch.relu(x)
    if activation == "softmax":
        return torch.softmax(x, dim=-1)
    return x


def _fan_in_uniform(rows: int, cols: int, generator: Optional[torch.Generator]) -> torch.Tensor:
    bound = 1.0 / math.sqrt(rows)
    return (torch.rand(rows, cols, generator=generator, dtype=DTYPE) * 2.0 - 1.0) * bound


class GwnnLayer(nn.Module):
    """X^{m+1} = sigma(Psi_s F^m Psi_s^{-1} X^m W^m) with one kernel shared by all channels."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        n_nodes: int,
        activation: str = "relu",
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise InvalidModel(f"unknown activation {activation!r}")
        self.activation = activation
        self.weight = nn.Parameter(_fan_in_uniform(in_dim, out_dim, generator))
        self.kernel = nn.Parameter(torch.ones(n_nodes, dtype=DTYPE))

    def forward(self, x: torch.Tensor, propagator: WaveletPropagator) -> torch.Tensor:
        if x.shape[1] != self.weight.shape[0]:
            raise DimensionMismatch(f"layer expects {self.weight.shape[0]} input channels, got {x.shape[1]}")
        if propagator.n != self.kernel.shape[0] or x.shape[0] != self.kernel.shape[0]:
            raise DimensionMismatch(
                f"kernel is bound to {self.kernel.shape[0]} nodes, graph has {x.shape[0]}"
            )
        h = propagator.analysis(x @ self.weight)
        h = propagator.synthesis(self.kernel[:, None] * h)
        return _activate(h, self.activation)


class GcnLayer(nn.Module):
    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        activation: str = "relu",
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise InvalidModel(f"unknown activation {activation!r}")
        self.activation = activation
        self.weight = nn.Parameter(_fan_in_uniform(in_dim, out_dim, generator))

    def forward(self, x: torch.Tensor, propagation: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.weight.shape[0]:
            raise DimensionMismatch(f"layer expects {self.weight.shape[0]} input channels, got {x.shape[1]}")
        if propagation.shape[0] != x.shape[0]:
            raise DimensionMismatch(f"propagation is {tuple(propagation.shape)}, input has {x.shape[0]} rows")
        return _activate(propagation @ (x @ self.weight), self.activation)


def _layer_dims(in_dim: int, hidden: Sequence[int], out_dim: int) -> List[Tuple[int, int]]:
    dims = [in_dim, *hidden, out_dim]
    return list(zip(dims[:-1], dims[1:]))


class GwnnNetwork(nn.Module):
    """Three-layer GWNN: relu, relu, softmax; dims C_1 -> 256 -> 128 -> C_2 by default."""

    kind = "gwnn"

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        n_nodes: int,
        scale: float,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        mode: str = CHEBYSHEV,
        k: int = 2,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if mode not in (EXACT, CHEBYSHEV):
            raise InvalidModel(f"unknown operator mode {mode!r}")
        self.scale = float(scale)
        self.mode = mode
        self.k = k
        dims = _layer_dims(in_dim, hidden, out_dim)
        activations = ["relu"] * (len(dims) - 1) + ["softmax"]
        self.layers = nn.ModuleList(
            GwnnLayer(p, q, n_nodes, act, generator) for (p, q), act in zip(dims, activations)
        )

    def propagator(self, graph: Graph) -> WaveletPropagator:
        return wavelet_propagator(graph, self.scale, self.mode, self.k)

    def forward(self, x: torch.Tensor, propagator: WaveletPropagator, return_hidden: bool = False):
        hidden = x
        for layer in self.layers[:-1]:
            hidden = layer(hidden, propagator)
        out = self.layers[-1](hidden, propagator)
        return (out, hidden) if return_hidden else out


class GcnNetwork(nn.Module):
    """Kipf-style GCN with the same layer dims as the GWNN it replaces."""

    kind = "gcn"

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        dims = _layer_dims(in_dim, hidden, out_dim)
        activations = ["relu"] * (len(dims) - 1) + ["softmax"]
        self.layers = nn.ModuleList(GcnLayer(p, q, act, generator) for (p, q), act in zip(dims, activations))

    def propagator(self, graph: Graph) -> torch.Tensor:
        return gcn_propagation(graph)

    def forward(self, x: torch.Tensor, propagation: torch.Tensor, return_hidden: bool = False):
        hidden = x
        for layer in self.layers[:-1]:
            hidden = layer(hidden, propagation)
        out = self.layers[-1](hidden, propagation)
        return (out, hidden) if return_hidden else out


def embeddings_tensor(graph: Graph) -> torch.Tensor:
    return torch.tensor(graph.embeddings, dtype=DTYPE)


def gwnn_layer_forward(
    graph: Graph, propagator: WaveletPropagator, layer: GwnnLayer, x: torch.Tensor
) -> torch.Tensor:
    if propagator.n != graph.n:
        raise DimensionMismatch(f"propagator built for {propagator.n} nodes, graph has {graph.n}")
    return layer(x, propagator)


def gwnn_forward(net: GwnnNetwork, graph: Graph) -> torch.Tensor:
    """N x C_2 node probability matrix."""
    return net(embeddings_tensor(graph), net.propagator(graph))


def gcn_layer_forward(graph: Graph, layer: GcnLayer, x: torch.Tensor) -> torch.Tensor:
    return layer(x, gcn_propagation(graph))
