"""Named random streams derived from a single seed."""

from typing import Dict, Iterable

import numpy as np
import torch

STREAM_NAMES = ("init", "shuffle", "data", "split")


def streams(seed: int, names: Iterable[str] = STREAM_NAMES) -> Dict[str, np.random.Generator]:
    """Spawn one independent generator per name from ``seed``.

    The mapping from name to stream depends only on the position of the name in
    ``names``, so callers must keep the order stable.
    """
    names = tuple(names)
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def torch_generator(rng: np.random.Generator) -> torch.Generator:
    """Seed a CPU torch generator from a numpy stream."""
    generator = torch.Generator()
    generator.manual_seed(int(rng.integers(0, 2**63 - 1)))
    return generator
