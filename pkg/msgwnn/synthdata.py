"""
Deterministic multi-scale planted-structure datasets.

Every graph is a patch grid whose nodes carry one of two blob identities.
Classes share the same identity counts and differ only in how the identities
are arranged (checkerboard or stripes, at a class-specific block size), so a
model has to see structure at the right scale to tell them apart.

With the default "lesion" annotation, identity-1 nodes carry the graph label
and the rest are normal tissue (class 0). "broadcast" gives every node the
graph label, as datasets with image-level labels only must.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from msgwnn.errors import ClassTooSmall, InconsistentDataset, InvalidSpec
from msgwnn.graph import Graph, graph_from_dict, graph_to_dict, lattice_adjacency
from msgwnn.graph_build import EdgeRule, SimilarityParams, embedding_similarity, threshold_edges
from msgwnn.model import LabeledGraph
from msgwnn.rng import streams

logger = logging.getLogger(__name__)

IDENTITIES = 2
NORMAL_CLASS = 0
ANNOTATIONS = ("lesion", "broadcast")
GEOMETRIES = ("checker", "stripes")
DATASET_FORMAT = 1


@dataclass(frozen=True)
class SynthSpec:
    height: int = 8
    width: int = 8
    classes: int = 4
    blob_scales: Tuple[int, ...] = (1, 2, 4)
    noise_sigma: float = 0.1
    samples_per_class: int = 40
    seed: int = 0
    topology: str = "lattice"
    alpha: float = 90.0
    annotation: str = "lesion"

    def validate(self) -> None:
        if self.height < 1 or self.width < 1:
            raise InvalidSpec(f"grid must be at least 1x1, got {self.height}x{self.width}")
        if self.classes < 1 or self.samples_per_class < 1:
            raise InvalidSpec("need at least one class and one sample per class")
        if not self.blob_scales:
            raise InvalidSpec("blob_scales is empty")
        for size in self.blob_scales:
            if size < 1 or self.height % size or self.width % size:
                raise InvalidSpec(f"blob size {size} does not divide the {self.height}x{self.width} grid")
        if self.noise_sigma < 0:
            raise InvalidSpec(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.topology not in ("lattice", "similarity"):
            raise InvalidSpec(f"unknown topology {self.topology!r}")
        if self.annotation not in ANNOTATIONS:
            raise InvalidSpec(f"annotation must be one of {ANNOTATIONS}, got {self.annotation!r}")

    @property
    def n_nodes(self) -> int:
        return self.height * self.width

    def class_pattern(self, label: int) -> Tuple[str, int]:
        """(geometry, block size) planted for class ``label``."""
        size = self.blob_scales[label % len(self.blob_scales)]
        geometry = GEOMETRIES[(label // len(self.blob_scales)) % len(GEOMETRIES)]
        return geometry, size


def plant_pattern(spec: SynthSpec, label: int, rng: np.random.Generator) -> np.ndarray:
    """H' x W' array of blob identities for one sample of class ``label``."""
    geometry, size = spec.class_pattern(label)
    rows = np.arange(spec.height)[:, None] // size
    cols = np.arange(spec.width)[None, :] // size
    if geometry == "checker":
        pattern = (rows + cols) % 2
    else:
        pattern = np.broadcast_to(cols % 2, (spec.height, spec.width))
        if spec.height == spec.width and rng.integers(2):
            pattern = pattern.T
    shift = rng.integers(0, 2 * size, size=2)
    pattern = np.roll(pattern, shift=tuple(int(s) for s in shift), axis=(0, 1))
    if rng.integers(2):
        pattern = 1 - pattern
    return np.ascontiguousarray(pattern)


def generate(spec: SynthSpec) -> List[LabeledGraph]:
    """samples_per_class graphs per class, ordered by class then sample index."""
    spec.validate()
    rng = streams(spec.seed)["data"]
    n = spec.n_nodes
    lattice = lattice_adjacency(spec.height, spec.width) + np.eye(n)

    dataset = []
    for label in range(spec.classes):
        for _ in range(spec.samples_per_class):
            identities = plant_pattern(spec, label, rng).ravel()
            embeddings = np.eye(IDENTITIES)[identities]
            if spec.noise_sigma > 0:
                embeddings = embeddings + rng.normal(0.0, spec.noise_sigma, size=embeddings.shape)
            if spec.topology == "lattice":
                adjacency = lattice
            else:
                sim = embedding_similarity(embeddings, SimilarityParams.identity(IDENTITIES))
                adjacency = threshold_edges(sim, EdgeRule(spec.alpha))
            graph = Graph(n=n, adjacency=adjacency, embeddings=embeddings)
            if spec.annotation == "lesion":
                node_labels = np.where(identities == 1, label, NORMAL_CLASS)
            else:
                node_labels = np.full(n, label)
            dataset.append(LabeledGraph(graph=graph, node_labels=node_labels, graph_label=label))
    logger.info(
        "generated %d graphs (%d classes x %d samples, N=%d)",
        len(dataset),
        spec.classes,
        spec.samples_per_class,
        n,
    )
    return dataset


def _train_counts(class_sizes: Dict[int, int], fraction: float) -> Dict[int, int]:
    # largest-remainder allocation so the overall train count is round(fraction * total)
    total = sum(class_sizes.values())
    target = math.floor(fraction * total + 0.5)
    quotas = {label: fraction * size for label, size in class_sizes.items()}
    counts = {label: math.floor(q) for label, q in quotas.items()}
    by_remainder = sorted(class_sizes, key=lambda label: (-(quotas[label] - counts[label]), label))
    for label in by_remainder[: max(0, target - sum(counts.values()))]:
        counts[label] += 1
    return {label: min(max(count, 1), class_sizes[label] - 1) for label, count in counts.items()}


def split(
    dataset: Sequence[LabeledGraph], train_fraction: float = 0.7, seed: int = 0
) -> Tuple[List[LabeledGraph], List[LabeledGraph]]:
    """Stratified, seeded split; both parts keep the original dataset order."""
    if not 0 < train_fraction < 1:
        raise InvalidSpec(f"train_fraction must lie in (0, 1), got {train_fraction}")
    by_class: Dict[int, List[int]] = {}
    for index, item in enumerate(dataset):
        by_class.setdefault(item.graph_label, []).append(index)
    for label, members in sorted(by_class.items()):
        if len(members) < 2:
            raise ClassTooSmall(label, len(members))

    rng = streams(seed)["split"]
    counts = _train_counts({label: len(m) for label, m in by_class.items()}, train_fraction)
    train_indices = set()
    for label in sorted(by_class):
        members = np.asarray(by_class[label])
        chosen = rng.permutation(members)[: counts[label]]
        train_indices.update(int(i) for i in chosen)

    train = [item for i, item in enumerate(dataset) if i in train_indices]
    test = [item for i, item in enumerate(dataset) if i not in train_indices]
    return train, test


def save_dataset(dataset: Sequence[LabeledGraph], directory: Union[str, Path]) -> None:
    """Write graph JSON files plus label sidecars and a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, item in enumerate(dataset):
        stem = f"graph_{index:04d}"
        with open(directory / f"{stem}.json", "w", encoding="utf-8") as f:
            json.dump(graph_to_dict(item.graph), f)
        with open(directory / f"{stem}.labels.json", "w", encoding="utf-8") as f:
            json.dump({"graph_label": item.graph_label, "node_labels": item.node_labels.tolist()}, f)
        entries.append(stem)
    n_classes = 1 + max((item.graph_label for item in dataset), default=-1)
    manifest = {"format": DATASET_FORMAT, "count": len(entries), "n_classes": n_classes, "graphs": entries}
    with open(directory / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
    logger.info("wrote %d graphs to %s", len(entries), directory)


def load_dataset(directory: Union[str, Path]) -> List[LabeledGraph]:
    directory = Path(directory)
    with open(directory / "manifest.json", "r", encoding="utf-8") as f:
        manifest = json.load(f)
    if manifest.get("format") != DATASET_FORMAT:
        raise InconsistentDataset(f"{directory}: unsupported dataset format {manifest.get('format')!r}")
    dataset = []
    for stem in manifest["graphs"]:
        with open(directory / f"{stem}.json", "r", encoding="utf-8") as f:
            graph = graph_from_dict(json.load(f), base_dir=directory)
        with open(directory / f"{stem}.labels.json", "r", encoding="utf-8") as f:
            labels = json.load(f)
        dataset.append(
            LabeledGraph(graph=graph, node_labels=np.asarray(labels["node_labels"]), graph_label=labels["graph_label"])
        )
    return dataset
