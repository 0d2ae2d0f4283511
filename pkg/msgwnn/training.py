"""
Training loop, evaluation and the scale / lambda ablations.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import torch
from sklearn.metrics import accuracy_score, confusion_matrix

from msgwnn.errors import ConfigError, InconsistentDataset
from msgwnn.model import (
    LabeledGraph,
    ModelConfig,
    MsGwnnModel,
    build_model,
    loss,
    predicted_class,
    validate_scales,
)
from msgwnn.rng import streams
from msgwnn.telemetry import tracer

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1.0
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.99
ADAM_EPSILON = 1e-8
DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 16
DEFAULT_LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class TrainConfig:
    lam: float = DEFAULT_LAMBDA
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError(f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError(f"invalid epochs={self.epochs} / batch_size={self.batch_size}")


@dataclass
class EpochMetrics:
    epoch: int
    loss_total: float
    loss_node: float
    loss_graph: float
    train_acc: float

    def to_dict(self) -> Dict:
        return {
            "epoch": self.epoch,
            "loss_total": self.loss_total,
            "loss_node": self.loss_node,
            "loss_graph": self.loss_graph,
            "train_acc": self.train_acc,
        }


class TrainResult(NamedTuple):
    model: MsGwnnModel
    history: List[EpochMetrics]


@dataclass
class EvaluationReport:
    accuracy: float
    per_class: List[float]
    confusion: List[List[float]]

    def to_dict(self) -> Dict:
        return {
            "format": 1,
            "accuracy": self.accuracy,
            "per_class": self.per_class,
            "confusion": self.confusion,
        }


@dataclass
class AblationRow:
    label: str
    scales: List[float]
    lam: float
    kind: str
    accuracy: float

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "scales": self.scales,
            "lambda": self.lam,
            "kind": self.kind,
            "accuracy": self.accuracy,
        }


def check_dataset(dataset: Sequence[LabeledGraph], model: MsGwnnModel) -> None:
    """Raise InconsistentDataset unless every graph fits the model's N, C_1 and C_2."""
    if not dataset:
        raise InconsistentDataset("dataset is empty")
    for index, item in enumerate(dataset):
        graph = item.graph
        if graph.n != model.n_nodes or graph.channels != model.in_dim:
            raise InconsistentDataset(
                f"graph {index} has {graph.n} nodes x {graph.channels} channels; "
                f"model expects {model.n_nodes} x {model.in_dim}"
            )
        if item.graph_label >= model.n_classes or item.node_labels.max() >= model.n_classes:
            raise InconsistentDataset(f"graph {index} has a label outside 0..{model.n_classes - 1}")


def dataset_dims(dataset: Sequence[LabeledGraph]) -> tuple:
    """(n_nodes, in_dim, n_classes) inferred from a dataset."""
    if not dataset:
        raise InconsistentDataset("dataset is empty")
    first = dataset[0].graph
    n_classes = 1 + max(max(item.graph_label, int(item.node_labels.max())) for item in dataset)
    return first.n, first.channels, n_classes


def train(model: MsGwnnModel, dataset: Sequence[LabeledGraph], config: TrainConfig) -> TrainResult:
    """Adam on all trainable parameters; one epoch is one seeded shuffle of the dataset."""
    check_dataset(dataset, model)
    shuffle_rng = streams(config.seed)["shuffle"]
    optimizer = torch.optim.Adam(
        [p for p in model.parameters() if p.requires_grad],
        lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
        eps=ADAM_EPSILON,
    )
    cached = model.config.topology == "given"
    contexts = [model.prepare(item.graph) for item in dataset] if cached else None

    history = []
    with tracer.start_as_current_span("train") as span:
        span.set_attribute("epochs", config.epochs)
        span.set_attribute("graphs", len(dataset))
        model.train()
        for epoch in range(1, config.epochs + 1):
            with tracer.start_as_current_span("train.epoch") as epoch_span:
                order = shuffle_rng.permutation(len(dataset))
                totals = np.zeros(3)
                correct = 0
                for start in range(0, len(order), config.batch_size):
                    batch = order[start : start + config.batch_size]
                    optimizer.zero_grad()
                    batch_loss = 0.0
                    for index in batch:
                        item = dataset[index]
                        context = contexts[index] if cached else model.prepare(item.graph)
                        output = model(item.graph, context)
                        parts = loss(output, item, config.lam)
                        batch_loss = batch_loss + parts.total
                        totals += [parts.total.item(), parts.node.item(), parts.graph.item()]
                        correct += predicted_class(output.graph_probs) == item.graph_label
                    (batch_loss / len(batch)).backward()
                    optimizer.step()

                metrics = EpochMetrics(
                    epoch=epoch,
                    loss_total=float(totals[0] / len(dataset)),
                    loss_node=float(totals[1] / len(dataset)),
                    loss_graph=float(totals[2] / len(dataset)),
                    train_acc=correct / len(dataset),
                )
                for key, value in metrics.to_dict().items():
                    epoch_span.set_attribute(key, value)
                history.append(metrics)
                logger.info(
                    "epoch %d: loss %.4f (node %.4f, graph %.4f), train acc %.3f",
                    epoch,
                    metrics.loss_total,
                    metrics.loss_node,
                    metrics.loss_graph,
                    metrics.train_acc,
                )
        model.eval()
    return TrainResult(model, history)


def evaluate(model: MsGwnnModel, dataset: Sequence[LabeledGraph]) -> EvaluationReport:
    """Graph-level accuracy, per-class accuracy and the row-normalised confusion matrix."""
    check_dataset(dataset, model)
    with tracer.start_as_current_span("evaluate"), torch.no_grad():
        y_true = [item.graph_label for item in dataset]
        y_pred = [predicted_class(model(item.graph).graph_probs) for item in dataset]
    labels = list(range(model.n_classes))
    confusion = confusion_matrix(y_true, y_pred, labels=labels, normalize="true")
    report = EvaluationReport(
        accuracy=float(accuracy_score(y_true, y_pred)),
        per_class=[float(v) for v in np.diag(confusion)],
        confusion=confusion.tolist(),
    )
    logger.info("accuracy %.4f over %d graphs", report.accuracy, len(dataset))
    return report


def _ablation_run(
    label: str,
    model_config: ModelConfig,
    train_config: TrainConfig,
    train_set: Sequence[LabeledGraph],
    test_set: Sequence[LabeledGraph],
) -> AblationRow:
    n_nodes, in_dim, n_classes = dataset_dims(train_set)
    with tracer.start_as_current_span("ablate.run") as span:
        span.set_attribute("label", label)
        model = build_model(model_config, in_dim, n_classes, n_nodes, seed=train_config.seed)
        train(model, train_set, train_config)
        accuracy = evaluate(model, test_set).accuracy
        span.set_attribute("accuracy", accuracy)
    row = AblationRow(
        label=label,
        scales=list(model_config.scales),
        lam=train_config.lam,
        kind=model_config.kind,
        accuracy=accuracy,
    )
    logger.info("ablation %s: accuracy %.4f", label, accuracy)
    return row


def ablate_scales(
    scale_sets: Sequence[Sequence[float]],
    train_set: Sequence[LabeledGraph],
    test_set: Sequence[LabeledGraph],
    model_config: ModelConfig = ModelConfig(),
    train_config: TrainConfig = TrainConfig(),
) -> List[AblationRow]:
    """One model per scale set, identical seed and training settings."""
    for scales in scale_sets:
        validate_scales(scales)
    rows = []
    for scales in scale_sets:
        config = replace(model_config, scales=tuple(scales))
        prefix = "GCN" if config.kind == "gcn" else "MS-GWNN"
        label = f"{prefix}-{len(scales)} (s={','.join(f'{s:g}' for s in scales)})"
        rows.append(_ablation_run(label, config, train_config, train_set, test_set))
    return rows


def ablate_lambda(
    lambdas: Sequence[float],
    train_set: Sequence[LabeledGraph],
    test_set: Sequence[LabeledGraph],
    model_config: ModelConfig = ModelConfig(),
    train_config: TrainConfig = TrainConfig(),
) -> List[AblationRow]:
    """One model per node-loss weight lambda."""
    configs = [replace(train_config, lam=float(lam)) for lam in lambdas]
    return [
        _ablation_run(f"MS-GWNN-{len(model_config.scales)} (lambda={c.lam:g})", model_config, c, train_set, test_set)
        for c in configs
    ]


def fit(
    dataset: Sequence[LabeledGraph],
    model_config: ModelConfig = ModelConfig(),
    train_config: TrainConfig = TrainConfig(),
    n_classes: Optional[int] = None,
) -> TrainResult:
    """Build a model sized for ``dataset`` and train it."""
    n_nodes, in_dim, inferred = dataset_dims(dataset)
    model = build_model(model_config, in_dim, n_classes or inferred, n_nodes, seed=train_config.seed)
    return train(model, dataset, train_config)
