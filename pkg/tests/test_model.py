import math
from dataclasses import replace

import numpy as np
import pytest
import torch

from msgwnn.errors import InvalidModel, ShapeMismatch, ValidationError
from msgwnn.graph import Graph
from msgwnn.graph_build import EdgeRule, SimilarityParams, embedding_similarity, threshold_edges
from msgwnn.layers import DTYPE, gwnn_forward
from msgwnn.model import (
    LabeledGraph,
    ModelConfig,
    ModelOutput,
    MsGwnnModel,
    aggregate_branches,
    build_model,
    graph_readout,
    loss,
    predicted_class,
    validate_scales,
)

from conftest import random_connected_graph

TINY = ModelConfig(scales=(0.5, 1.0), hidden=(5, 3), mode="exact")


def _t(values):
    return torch.as_tensor(values, dtype=DTYPE)


def _uniform_output(n, classes, branches):
    branch_probs = [torch.full((n, classes), 1.0 / classes, dtype=DTYPE) for _ in range(branches)]
    aggregated = aggregate_branches(branch_probs)
    return ModelOutput(branch_probs, aggregated, graph_readout(aggregated))


def test_aggregate_examples():
    single = _t([[0.3, 0.7], [0.6, 0.4]])
    assert torch.equal(aggregate_branches([single]), single)
    torch.testing.assert_close(aggregate_branches([single] * 3), 3 * single)
    assert aggregate_branches([_t([[1.0, 0.0]]), _t([[0.0, 1.0]])]).tolist() == [[1.0, 1.0]]


def test_aggregate_rejects_mismatched_or_empty():
    with pytest.raises(ShapeMismatch):
        aggregate_branches([_t([[1.0, 0.0]]), _t([[1.0, 0.0, 0.0]])])
    with pytest.raises(ShapeMismatch):
        aggregate_branches([])


def test_graph_readout_examples():
    probs = graph_readout(_t([[0.9, 0.1], [0.8, 0.2]]))
    np.testing.assert_allclose(probs.numpy(), [0.8022, 0.1978], atol=1e-4)
    assert predicted_class(graph_readout(_t([[1.0, 0.0, 0.0]] * 5))) == 0
    torch.testing.assert_close(graph_readout(torch.full((4, 3), 1 / 3, dtype=DTYPE)), torch.full((3,), 1 / 3, dtype=DTYPE))


def test_readout_argmax_is_scale_invariant(rng):
    agg = _t(rng.uniform(size=(7, 4)))
    expected = predicted_class(graph_readout(agg))
    for c in (0.1, 2.0, 50.0):
        assert predicted_class(graph_readout(c * agg)) == expected


def test_readout_weight_is_applied_before_softmax():
    swap = _t([[0.0, 1.0], [1.0, 0.0]])
    probs = graph_readout(_t([[0.9, 0.1], [0.8, 0.2]]), swap)
    np.testing.assert_allclose(probs.numpy(), [0.1978, 0.8022], atol=1e-4)


def test_predicted_class_ties_go_to_lowest_id():
    assert predicted_class(_t([0.25, 0.25, 0.25, 0.25])) == 0
    assert predicted_class(_t([0.1, 0.45, 0.45])) == 1


def test_loss_uniform_predictions():
    graph = Graph(n=5, adjacency=np.eye(5), embeddings=np.ones(5))
    labeled = LabeledGraph.broadcast(graph, 2)
    parts = loss(_uniform_output(5, 4, 3), labeled, lam=1.0)
    assert parts.node.item() == pytest.approx(3 * math.log(4))
    assert parts.graph.item() == pytest.approx(math.log(4))
    assert parts.total.item() == pytest.approx(4 * math.log(4))
    assert parts.total.item() == pytest.approx(5.545, abs=1e-3)


def test_loss_lambda_zero_is_graph_loss_and_decomposes():
    graph = Graph(n=3, adjacency=np.eye(3), embeddings=np.ones(3))
    labeled = LabeledGraph(graph=graph, node_labels=[0, 1, 1], graph_label=1)
    branch = _t([[0.7, 0.3], [0.2, 0.8], [0.6, 0.4]])
    output = ModelOutput([branch, branch], aggregate_branches([branch, branch]), graph_readout(2 * branch))
    zero = loss(output, labeled, lam=0.0)
    one = loss(output, labeled, lam=1.0)
    assert zero.total.item() == zero.graph.item()
    expected_node = -2 * (math.log(0.7) + math.log(0.8) + math.log(0.4)) / 3
    assert one.total.item() - zero.total.item() == pytest.approx(expected_node, abs=1e-10)


def test_loss_perfect_predictions_and_floor():
    graph = Graph(n=2, adjacency=np.eye(2), embeddings=np.ones(2))
    labeled = LabeledGraph.broadcast(graph, 0)
    perfect = _t([[1.0, 0.0], [1.0, 0.0]])
    output = ModelOutput([perfect], perfect, _t([1.0, 0.0]))
    assert loss(output, labeled, lam=1.0).total.item() <= 1e-6

    wrong = ModelOutput([perfect], perfect, _t([1.0, 0.0]))
    assert loss(wrong, LabeledGraph.broadcast(graph, 1), lam=0.0).total.item() == pytest.approx(-math.log(1e-12))


def test_labeled_graph_validation():
    graph = Graph(n=3, adjacency=np.eye(3), embeddings=np.ones(3))
    with pytest.raises(ValidationError):
        LabeledGraph(graph=graph, node_labels=[0, 1], graph_label=0)
    with pytest.raises(ValidationError):
        LabeledGraph(graph=graph, node_labels=[0, -1, 0], graph_label=0)
    assert LabeledGraph.broadcast(graph, 2).node_labels.tolist() == [2, 2, 2]


@pytest.mark.parametrize("scales", [(), (0.0, 1.0), (-0.5,), (1.0, 0.5), (0.5, 0.5)])
def test_validate_scales_rejects(scales):
    with pytest.raises(InvalidModel):
        validate_scales(scales)


def test_model_config_rejections():
    with pytest.raises(InvalidModel):
        MsGwnnModel(3, 2, 6, ModelConfig(kind="gat"))
    with pytest.raises(InvalidModel):
        MsGwnnModel(3, 2, 6, ModelConfig(topology="knn"))
    with pytest.raises(InvalidModel):
        MsGwnnModel(3, 0, 6, TINY)


def test_forward_shapes_and_row_sums(small_graph):
    model = build_model(TINY, in_dim=3, n_classes=2, n_nodes=6, seed=1)
    with torch.no_grad():
        output = model(small_graph)
    assert len(output.branch_probs) == 2
    torch.testing.assert_close(output.aggregated.sum(dim=1), torch.full((6,), 2.0, dtype=DTYPE))
    assert output.graph_probs.sum().item() == pytest.approx(1.0)


def test_single_branch_equals_network_plus_readout(small_graph):
    model = build_model(ModelConfig(scales=(1.0,), hidden=(4, 4), mode="exact"), 3, 2, 6, seed=2)
    with torch.no_grad():
        output = model(small_graph)
        alone = gwnn_forward(model.branches[0], small_graph)
    torch.testing.assert_close(output.aggregated, alone)
    torch.testing.assert_close(output.graph_probs, graph_readout(alone))


def test_build_model_is_seed_deterministic():
    first = build_model(TINY, 3, 2, 6, seed=9)
    second = build_model(TINY, 3, 2, 6, seed=9)
    other = build_model(TINY, 3, 2, 6, seed=10)
    for (name, a), (_, b) in zip(first.ordered_parameters(), second.ordered_parameters()):
        assert torch.equal(a, b), name
    assert not torch.equal(first.branches[0].layers[0].weight, other.branches[0].layers[0].weight)


def test_shape_mismatch_on_wrong_graph(small_graph, path9):
    model = build_model(TINY, 3, 2, 6)
    with pytest.raises(ShapeMismatch):
        model(path9)
    with pytest.raises(ShapeMismatch):
        model(small_graph.with_embeddings(np.ones((6, 2))))


def test_node_embeddings_are_penultimate_outputs(small_graph):
    model = build_model(TINY, 3, 2, 6)
    embeddings = model.node_embeddings(small_graph)
    assert [e.shape for e in embeddings] == [(6, 3), (6, 3)]
    assert all(np.all(e >= 0) for e in embeddings)


def test_ordered_parameters_layout():
    model = build_model(TINY, 3, 2, 6)
    names = [name for name, _ in model.ordered_parameters()]
    assert names[:6] == ["branch0.W1", "branch0.F1", "branch0.W2", "branch0.F2", "branch0.W3", "branch0.F3"]
    assert names[-3:] == ["theta", "phi", "readout"]
    gcn = build_model(ModelConfig(scales=(1.0,), hidden=(4,), kind="gcn"), 3, 2, 6)
    assert [name for name, _ in gcn.ordered_parameters()] == ["branch0.W1", "branch0.W2", "theta", "phi", "readout"]


def test_similarity_projections_are_buffers_not_parameters():
    model = build_model(TINY, 3, 2, 6)
    parameter_names = {name for name, _ in model.named_parameters()}
    assert {"theta", "phi"}.isdisjoint(parameter_names)
    assert {"theta", "phi"} <= {name for name, _ in model.named_buffers()}
    assert {"theta", "phi"} <= set(model.state_dict())
    torch.testing.assert_close(model.theta, torch.eye(3, dtype=DTYPE))


def test_readout_weight_trainable_only_on_request():
    assert not build_model(TINY, 3, 2, 6).readout_weight.requires_grad
    assert build_model(replace(TINY, learn_readout=True), 3, 2, 6).readout_weight.requires_grad


def test_similarity_topology_uses_thresholded_embeddings(small_graph):
    config = ModelConfig(scales=(1.0,), hidden=(4, 4), mode="exact", topology="similarity", alpha=70.0)
    model = build_model(config, 3, 2, 6)
    rebuilt = model.topology_for(small_graph)
    sim = embedding_similarity(small_graph.embeddings, SimilarityParams.identity(3))
    np.testing.assert_array_equal(rebuilt.adjacency, threshold_edges(sim, EdgeRule(70.0)))

    labeled = LabeledGraph.broadcast(small_graph, 1)
    loss(model(small_graph), labeled, lam=1.0).total.backward()
    assert not model.theta.requires_grad and not model.phi.requires_grad
    assert model.branches[0].layers[0].weight.grad is not None


@pytest.mark.parametrize("seed", range(5))
def test_full_model_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    graph = random_connected_graph(6, rng, density=0.3, channels=4)
    labeled = LabeledGraph(graph=graph, node_labels=rng.integers(0, 2, size=6), graph_label=int(rng.integers(2)))
    config = ModelConfig(scales=(0.5, 1.0), hidden=(5, 4), mode="exact", learn_readout=True)
    model = build_model(config, in_dim=4, n_classes=2, n_nodes=6, seed=seed)
    with torch.no_grad():
        for branch in model.branches:
            for layer in branch.layers:
                layer.kernel.copy_(torch.as_tensor(rng.uniform(0.5, 1.5, size=6), dtype=DTYPE))
    context = model.prepare(graph)
    names = [name for name, p in model.named_parameters() if p.requires_grad]
    params = dict(model.named_parameters())
    inputs = tuple(params[name].detach().clone().requires_grad_() for name in names)

    def objective(*tensors):
        output = torch.func.functional_call(model, dict(zip(names, tensors)), (graph, context))
        return loss(output, labeled, lam=1.0).total

    assert torch.autograd.gradcheck(objective, inputs, eps=1e-4, atol=1e-6, rtol=1e-3)
