import numpy as np
import torch

from msgwnn.rng import STREAM_NAMES, streams, torch_generator


def test_streams_are_reproducible_and_independent():
    first, second = streams(5), streams(5)
    assert set(first) == set(STREAM_NAMES)
    assert first["data"].integers(0, 2**32) == second["data"].integers(0, 2**32)
    values = {name: rng.integers(0, 2**32) for name, rng in streams(5).items()}
    assert len(set(values.values())) == len(STREAM_NAMES)


def test_drawing_from_one_stream_does_not_shift_another():
    a, b = streams(8), streams(8)
    a["shuffle"].random(1000)
    assert np.array_equal(a["split"].permutation(10), b["split"].permutation(10))


def test_torch_generator_is_seeded_from_stream():
    x = torch.rand(3, generator=torch_generator(streams(2)["init"]))
    y = torch.rand(3, generator=torch_generator(streams(2)["init"]))
    assert torch.equal(x, y)
