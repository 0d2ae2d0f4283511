"""
Model checkpoints: one JSON header line followed by a flat little-endian
float64 parameter blob in the order given by ``MsGwnnModel.ordered_parameters``.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Union

import numpy as np
import torch

from msgwnn.errors import CheckpointMismatch, ValidationError
from msgwnn.model import ModelConfig, MsGwnnModel

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1
BLOB_DTYPE = np.dtype("<f8")


def checkpoint_header(model: MsGwnnModel) -> Dict:
    config = model.config
    return {
        "format": CHECKPOINT_FORMAT,
        "kind": config.kind,
        "dims": [model.in_dim, *config.hidden, model.n_classes],
        "scales": list(model.scales),
        "mode": config.mode,
        "k": config.k,
        "n_nodes": model.n_nodes,
        "n_classes": model.n_classes,
        "topology": config.topology,
        "alpha": config.alpha,
        "learn_readout": config.learn_readout,
        "parameters": [[name, list(param.shape)] for name, param in model.ordered_parameters()],
    }


def save_checkpoint(model: MsGwnnModel, path: Union[str, Path]) -> None:
    header = json.dumps(checkpoint_header(model), sort_keys=True)
    blob = np.concatenate(
        [param.detach().numpy().astype(BLOB_DTYPE).ravel() for _, param in model.ordered_parameters()]
    )
    with open(path, "wb") as f:
        f.write(header.encode("utf-8") + b"\n")
        f.write(blob.tobytes())
    logger.info("saved checkpoint with %d parameters to %s", blob.size, path)


def load_checkpoint(path: Union[str, Path]) -> MsGwnnModel:
    with open(path, "rb") as f:
        header_line = f.readline()
        payload = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointMismatch(f"{path}: unreadable checkpoint header: {e}") from e
    if not isinstance(header, dict) or header.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointMismatch(f"{path}: unsupported checkpoint header or format")

    try:
        dims = header["dims"]
        config = ModelConfig(
            scales=tuple(header["scales"]),
            hidden=tuple(dims[1:-1]),
            mode=header["mode"],
            k=header["k"],
            kind=header["kind"],
            topology=header["topology"],
            alpha=header["alpha"],
            learn_readout=header["learn_readout"],
        )
        model = MsGwnnModel(dims[0], dims[-1], header["n_nodes"], config)
    except (KeyError, IndexError, TypeError, ValidationError) as e:
        raise CheckpointMismatch(f"{path}: header does not describe a valid model: {e}") from e

    expected = [[name, list(param.shape)] for name, param in model.ordered_parameters()]
    if expected != header.get("parameters"):
        raise CheckpointMismatch(f"{path}: parameter layout does not match the declared model")
    if len(payload) % BLOB_DTYPE.itemsize:
        raise CheckpointMismatch(f"{path}: truncated parameter blob")
    blob = np.frombuffer(payload, dtype=BLOB_DTYPE)
    total = sum(int(np.prod(shape)) for _, shape in expected)
    if blob.size != total:
        raise CheckpointMismatch(f"{path}: blob holds {blob.size} values, header declares {total}")

    offset = 0
    with torch.no_grad():
        for _, param in model.ordered_parameters():
            size = param.numel()
            param.copy_(torch.from_numpy(blob[offset : offset + size].copy()).reshape(param.shape))
            offset += size
    model.eval()
    return model
