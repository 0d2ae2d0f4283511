"""
Multi-branch assembly: parallel GWNNs at scales s_1 < ... < s_B, summed
probability maps, graph-level readout and the combined node/graph loss
L_final = lambda * L_node + L_graph.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from msgwnn.errors import InvalidModel, ShapeMismatch, ValidationError
from msgwnn.graph import Graph
from msgwnn.graph_build import EdgeRule, SimilarityParams, embedding_similarity, threshold_edges
from msgwnn.layers import (
    CHEBYSHEV,
    DEFAULT_HIDDEN,
    DTYPE,
    GcnNetwork,
    GwnnNetwork,
    embeddings_tensor,
)
from msgwnn.rng import streams, torch_generator

logger = logging.getLogger(__name__)

DEFAULT_SCALES = (0.5, 1.0, 1.5)
PROBABILITY_FLOOR = 1e-12
TOPOLOGIES = ("given", "similarity")
BRANCH_KINDS = ("gwnn", "gcn")


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """A graph with node-level and graph-level supervision."""

    graph: Graph
    node_labels: np.ndarray
    graph_label: int

    def __post_init__(self):
        labels = np.asarray(self.node_labels, dtype=np.int64)
        if labels.shape != (self.graph.n,):
            raise ValidationError(f"need {self.graph.n} node labels, got shape {labels.shape}")
        if (labels.size and labels.min() < 0) or self.graph_label < 0:
            raise ValidationError("class ids must be non-negative")
        labels.setflags(write=False)
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "graph_label", int(self.graph_label))

    @classmethod
    def broadcast(cls, graph: Graph, graph_label: int) -> "LabeledGraph":
        """Give every node the image-level label (for datasets without node annotations)."""
        return cls(graph=graph, node_labels=np.full(graph.n, graph_label), graph_label=graph_label)


@dataclass(frozen=True)
class ModelConfig:
    scales: Tuple[float, ...] = DEFAULT_SCALES
    hidden: Tuple[int, ...] = DEFAULT_HIDDEN
    mode: str = CHEBYSHEV
    k: int = 2
    kind: str = "gwnn"
    topology: str = "given"
    alpha: float = 99.0
    learn_readout: bool = False


class ModelOutput(NamedTuple):
    branch_probs: List[torch.Tensor]
    aggregated: torch.Tensor
    graph_probs: torch.Tensor


class LossBreakdown(NamedTuple):
    total: torch.Tensor
    node: torch.Tensor
    graph: torch.Tensor


def validate_scales(scales: Sequence[float]) -> Tuple[float, ...]:
    scales = tuple(float(s) for s in scales)
    if not scales:
        raise InvalidModel("a model needs at least one branch (empty scale list)")
    if any(s <= 0 for s in scales):
        raise InvalidModel(f"scales must be positive, got {list(scales)}")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise InvalidModel(f"scales must be strictly increasing, got {list(scales)}")
    return scales


class MsGwnnModel(nn.Module):
    """Parallel branches whose node probability maps are summed and read out."""

    def __init__(
        self,
        in_dim: int,
        n_classes: int,
        n_nodes: int,
        config: ModelConfig = ModelConfig(),
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if config.kind not in BRANCH_KINDS:
            raise InvalidModel(f"unknown branch kind {config.kind!r}")
        if config.topology not in TOPOLOGIES:
            raise InvalidModel(f"unknown topology {config.topology!r}")
        if n_classes < 1 or in_dim < 1 or n_nodes < 1:
            raise InvalidModel(f"invalid dims: in={in_dim}, classes={n_classes}, nodes={n_nodes}")
        self.config = config
        self.scales = validate_scales(config.scales)
        self.in_dim = in_dim
        self.n_classes = n_classes
        self.n_nodes = n_nodes
        self.edge_rule = EdgeRule(config.alpha)

        if config.kind == "gwnn":
            branches = [
                GwnnNetwork(in_dim, n_classes, n_nodes, s, config.hidden, config.mode, config.k, generator)
                for s in self.scales
            ]
        else:
            branches = [GcnNetwork(in_dim, n_classes, config.hidden, generator) for _ in self.scales]
        self.branches = nn.ModuleList(branches)

        # similarity projections: checkpointed but not trained
        self.register_buffer("theta", torch.eye(in_dim, dtype=DTYPE))
        self.register_buffer("phi", torch.eye(in_dim, dtype=DTYPE))
        self.readout_weight = nn.Parameter(
            torch.eye(n_classes, dtype=DTYPE), requires_grad=config.learn_readout
        )

    def similarity_params(self) -> SimilarityParams:
        return SimilarityParams(
            theta_weight=self.theta.numpy().copy(),
            phi_weight=self.phi.numpy().copy(),
        )

    def topology_for(self, graph: Graph) -> Graph:
        if self.config.topology == "given":
            return graph
        sim = embedding_similarity(graph.embeddings, self.similarity_params())
        return Graph(n=graph.n, adjacency=threshold_edges(sim, self.edge_rule), embeddings=graph.embeddings)

    def prepare(self, graph: Graph) -> list:
        """Per-branch operators for ``graph``; constant within a training step."""
        if graph.n != self.n_nodes:
            raise ShapeMismatch(f"model is bound to {self.n_nodes} nodes, graph has {graph.n}")
        if graph.channels != self.in_dim:
            raise ShapeMismatch(f"model expects {self.in_dim} input channels, graph has {graph.channels}")
        graph = self.topology_for(graph)
        return [branch.propagator(graph) for branch in self.branches]

    def forward(self, graph: Graph, context: Optional[list] = None) -> ModelOutput:
        context = context if context is not None else self.prepare(graph)
        x = embeddings_tensor(graph)
        branch_probs = [branch(x, prop) for branch, prop in zip(self.branches, context)]
        aggregated = aggregate_branches(branch_probs)
        return ModelOutput(branch_probs, aggregated, graph_readout(aggregated, self.readout_weight))

    def node_embeddings(self, graph: Graph) -> List[np.ndarray]:
        """Penultimate-layer node representations of every branch."""
        context = self.prepare(graph)
        x = embeddings_tensor(graph)
        with torch.no_grad():
            return [branch(x, prop, return_hidden=True)[1].numpy() for branch, prop in zip(self.branches, context)]

    def ordered_parameters(self) -> List[Tuple[str, torch.Tensor]]:
        """Checkpointed tensors in order: per branch W1, F1, W2, F2, ...; then the theta and phi buffers, readout."""
        ordered = []
        for b, branch in enumerate(self.branches):
            for m, layer in enumerate(branch.layers, start=1):
                ordered.append((f"branch{b}.W{m}", layer.weight))
                if hasattr(layer, "kernel"):
                    ordered.append((f"branch{b}.F{m}", layer.kernel))
        ordered += [("theta", self.theta), ("phi", self.phi), ("readout", self.readout_weight)]
        return ordered


def build_model(
    config: ModelConfig, in_dim: int, n_classes: int, n_nodes: int, seed: int = 0
) -> MsGwnnModel:
    """Construct a model whose initial weights depend only on ``seed``."""
    generator = torch_generator(streams(seed)["init"])
    return MsGwnnModel(in_dim, n_classes, n_nodes, config, generator)


def aggregate_branches(branch_probs: Sequence[torch.Tensor]) -> torch.Tensor:
    """Elementwise sum of the branch probability maps."""
    if not branch_probs:
        raise ShapeMismatch("need at least one branch probability map")
    shape = branch_probs[0].shape
    for probs in branch_probs[1:]:
        if probs.shape != shape:
            raise ShapeMismatch(f"branch maps differ in shape: {tuple(shape)} vs {tuple(probs.shape)}")
    return torch.stack(list(branch_probs)).sum(dim=0)


def graph_readout(agg: torch.Tensor, readout_weight: Optional[torch.Tensor] = None) -> torch.Tensor:
    """softmax of the column sums (optionally through a C_2 x C_2 affine map)."""
    logits = agg.sum(dim=0)
    if readout_weight is not None:
        logits = logits @ readout_weight
    return torch.softmax(logits, dim=-1)


def _cross_entropy(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    picked = probs.gather(-1, labels.unsqueeze(-1)).squeeze(-1)
    return -torch.log(picked.clamp_min(PROBABILITY_FLOOR))


def loss(output: ModelOutput, labeled: LabeledGraph, lam: float) -> LossBreakdown:
    """lambda * L_node + L_graph; L_node sums the per-branch mean node cross-entropy."""
    node_labels = torch.tensor(labeled.node_labels)
    node_loss = sum(_cross_entropy(probs, node_labels).mean() for probs in output.branch_probs)
    graph_loss = _cross_entropy(output.graph_probs, torch.tensor(labeled.graph_label))
    return LossBreakdown(lam * node_loss + graph_loss, node_loss, graph_loss)


def predicted_class(graph_probs: torch.Tensor) -> int:
    """Argmax with ties resolved to the lowest class id."""
    return int(np.argmax(graph_probs.detach().numpy()))

