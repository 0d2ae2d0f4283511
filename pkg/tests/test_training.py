import numpy as np
import pytest
import torch

from msgwnn.errors import ConfigError, InconsistentDataset, InvalidModel
from msgwnn.graph import Graph, lattice_adjacency
from msgwnn.layers import DTYPE
from msgwnn.model import LabeledGraph, ModelConfig, build_model
from msgwnn.synthdata import SynthSpec, generate, split
from msgwnn.training import (
    EpochMetrics,
    TrainConfig,
    ablate_lambda,
    ablate_scales,
    check_dataset,
    dataset_dims,
    evaluate,
    fit,
    train,
)

SMALL = ModelConfig(scales=(0.5, 1.0), hidden=(6, 4), mode="exact")


def _flat(model):
    return torch.cat([p.detach().ravel() for _, p in model.ordered_parameters()])


def _identity_dataset():
    """Class c graphs carry the one-hot embedding e_c on every node."""
    adjacency = lattice_adjacency(2, 2) + np.eye(4)
    dataset = []
    for label in (0, 1, 0, 1):
        embeddings = np.tile(np.eye(2)[label], (4, 1))
        dataset.append(LabeledGraph.broadcast(Graph(n=4, adjacency=adjacency, embeddings=embeddings), label))
    return dataset


def _linear_model(weight):
    model = build_model(ModelConfig(scales=(1.0,), hidden=(), mode="exact"), in_dim=2, n_classes=2, n_nodes=4)
    with torch.no_grad():
        model.branches[0].layers[0].weight.copy_(torch.as_tensor(weight, dtype=DTYPE))
    return model


def test_zero_learning_rate_leaves_parameters_unchanged(tiny_dataset):
    model = build_model(SMALL, in_dim=2, n_classes=2, n_nodes=16, seed=0)
    before = _flat(model).clone()
    train(model, tiny_dataset, TrainConfig(learning_rate=0.0, epochs=3, batch_size=4))
    assert torch.equal(_flat(model), before)


def test_single_example_overfits(tiny_dataset):
    example = [tiny_dataset[-1]]
    config = ModelConfig(scales=(1.0,), hidden=(8, 8), mode="exact")
    result = fit(example, config, TrainConfig(learning_rate=1e-2, epochs=200, seed=4), n_classes=2)
    assert result.history[-1].loss_total < 0.5 * result.history[0].loss_total
    report = evaluate(result.model, example)
    assert report.accuracy == 1.0


def test_training_is_deterministic(tiny_split):
    train_set, _ = tiny_split
    config = TrainConfig(epochs=3, batch_size=4, seed=7)
    first = fit(train_set, SMALL, config)
    second = fit(train_set, SMALL, config)
    assert [m.to_dict() for m in first.history] == [m.to_dict() for m in second.history]
    assert torch.equal(_flat(first.model), _flat(second.model))


def test_history_has_one_entry_per_epoch(tiny_split):
    train_set, _ = tiny_split
    result = fit(train_set, SMALL, TrainConfig(epochs=2, batch_size=16))
    assert [m.epoch for m in result.history] == [1, 2]
    metrics = result.history[0]
    assert isinstance(metrics, EpochMetrics)
    assert metrics.loss_total == pytest.approx(metrics.loss_node + metrics.loss_graph)
    assert 0.0 <= metrics.train_acc <= 1.0
    assert set(metrics.to_dict()) == {"epoch", "loss_total", "loss_node", "loss_graph", "train_acc"}


def test_evaluate_all_correct_and_adversarial():
    dataset = _identity_dataset()
    report = evaluate(_linear_model(10.0 * np.eye(2)), dataset)
    assert report.accuracy == 1.0
    assert report.confusion == [[1.0, 0.0], [0.0, 1.0]]
    assert report.per_class == [1.0, 1.0]

    swapped = evaluate(_linear_model([[0.0, 10.0], [10.0, 0.0]]), dataset)
    assert swapped.accuracy == 0.0
    assert swapped.confusion == [[0.0, 1.0], [1.0, 0.0]]


def test_constant_model_scores_half_on_balanced_data():
    report = evaluate(_linear_model(np.zeros((2, 2))), _identity_dataset())
    assert report.accuracy == 0.5
    assert report.confusion == [[1.0, 0.0], [1.0, 0.0]]
    document = report.to_dict()
    assert document["format"] == 1 and document["per_class"] == [1.0, 0.0]


def test_check_dataset_rejections(tiny_dataset, path9):
    model = build_model(SMALL, in_dim=2, n_classes=2, n_nodes=16)
    with pytest.raises(InconsistentDataset):
        check_dataset([], model)
    with pytest.raises(InconsistentDataset):
        check_dataset([LabeledGraph.broadcast(path9, 0)], model)
    relabeled = LabeledGraph.broadcast(tiny_dataset[0].graph, 5)
    with pytest.raises(InconsistentDataset):
        check_dataset([relabeled], model)
    with pytest.raises(InconsistentDataset):
        train(model, [relabeled], TrainConfig(epochs=1))


def test_dataset_dims(tiny_dataset):
    assert dataset_dims(tiny_dataset) == (16, 2, 2)
    with pytest.raises(InconsistentDataset):
        dataset_dims([])


@pytest.mark.parametrize(
    "kwargs",
    [{"lam": -1.0}, {"learning_rate": -1e-3}, {"beta1": 1.0}, {"beta2": -0.1}, {"batch_size": 0}, {"epochs": -1}],
)
def test_train_config_rejections(kwargs):
    with pytest.raises(ConfigError):
        TrainConfig(**kwargs)


def test_ablate_scales_rows(tiny_split):
    train_set, test_set = tiny_split
    rows = ablate_scales(
        [(0.5,), (0.5, 1.0), (0.5,)], train_set, test_set, SMALL, TrainConfig(epochs=2, batch_size=4, seed=1)
    )
    assert [row.label for row in rows] == ["MS-GWNN-1 (s=0.5)", "MS-GWNN-2 (s=0.5,1)", "MS-GWNN-1 (s=0.5)"]
    assert rows[0].accuracy == rows[2].accuracy
    assert rows[1].to_dict()["scales"] == [0.5, 1.0]


def test_ablate_scales_rejects_empty_set_before_training(tiny_split):
    train_set, test_set = tiny_split
    with pytest.raises(InvalidModel):
        ablate_scales([(0.5,), ()], train_set, test_set, SMALL, TrainConfig(epochs=1))


def test_ablate_lambda_rows(tiny_split):
    train_set, test_set = tiny_split
    rows = ablate_lambda([0.0, 10.0], train_set, test_set, SMALL, TrainConfig(epochs=1, batch_size=4))
    assert [row.label for row in rows] == ["MS-GWNN-2 (lambda=0)", "MS-GWNN-2 (lambda=10)"]
    assert [row.to_dict()["lambda"] for row in rows] == [0.0, 10.0]


def _synthetic_benchmark():
    return split(generate(SynthSpec()), 0.7, seed=0)


@pytest.mark.slow
def test_three_scales_beat_one_scale_on_synthetic_benchmark():
    train_set, test_set = _synthetic_benchmark()
    singles, triples = [], []
    for seed in range(3):
        config = TrainConfig(seed=seed)
        rows = ablate_scales([(0.5,), (1.0,), (1.5,), (0.5, 1.0, 1.5)], train_set, test_set, train_config=config)
        singles.append([row.accuracy for row in rows[:3]])
        triples.append(rows[3].accuracy)
    best_single = max(np.mean(singles, axis=0))
    assert np.mean(triples) >= best_single + 0.03
    assert np.mean(triples) >= 0.9


@pytest.mark.slow
def test_moderate_lambda_beats_both_extremes_on_synthetic_benchmark():
    train_set, test_set = _synthetic_benchmark()
    accuracies = []
    for seed in range(3):
        rows = ablate_lambda([0.01, 1.0, 100.0], train_set, test_set, train_config=TrainConfig(seed=seed))
        accuracies.append([row.accuracy for row in rows])
    low, moderate, high = np.mean(accuracies, axis=0)
    assert moderate >= low
    assert moderate >= high


@pytest.mark.slow
def test_gcn_matches_single_branch_gwnn():
    train_set, test_set = _synthetic_benchmark()
    gwnn, gcn = [], []
    for seed in range(3):
        config = TrainConfig(seed=seed)
        rows = ablate_scales([(0.5,), (1.0,), (1.5,)], train_set, test_set, train_config=config)
        gwnn.append([row.accuracy for row in rows])
        gcn_row = ablate_scales([(1.0,)], train_set, test_set, ModelConfig(kind="gcn"), config)[0]
        assert gcn_row.label.startswith("GCN-1")
        gcn.append(gcn_row.accuracy)
    best_single = max(np.mean(gwnn, axis=0))
    assert abs(best_single - np.mean(gcn)) <= 0.05
