"""
Experiment configuration.

Files use a flat ``key = value`` format::

    # three-branch run
    scales = 0.5, 1.0, 1.5
    lambda = 1.0
    scale_sets = 0.5; 0.5, 1.0; 0.5, 1.0, 1.5

``#`` starts a comment, blank lines are ignored, lists are comma separated and
nested lists separate their members with ``;``. Command-line flags override
file values, which override the built-in defaults below.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

from msgwnn.errors import ConfigError, InvalidModel
from msgwnn.graph_build import DEFAULT_ALPHA, DEFAULT_PATCH
from msgwnn.layers import CHEBYSHEV, DEFAULT_HIDDEN, EXACT
from msgwnn.model import BRANCH_KINDS, DEFAULT_SCALES, TOPOLOGIES, validate_scales
from msgwnn.training import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_EPOCHS,
    DEFAULT_LAMBDA,
    DEFAULT_LAMBDA_GRID,
    DEFAULT_LEARNING_RATE,
)

logger = logging.getLogger(__name__)

# Constants
DEFAULT_CHEBYSHEV_K = 2
DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_SCALE_SETS = ((0.5,), (0.5, 1.0), (0.5, 1.0, 1.5))


@dataclass(frozen=True)
class ExperimentConfig:
    scales: Tuple[float, ...] = DEFAULT_SCALES
    scale_sets: Tuple[Tuple[float, ...], ...] = DEFAULT_SCALE_SETS
    lam: float = DEFAULT_LAMBDA
    lambdas: Tuple[float, ...] = DEFAULT_LAMBDA_GRID
    alpha: float = DEFAULT_ALPHA
    patch: int = DEFAULT_PATCH
    k: int = DEFAULT_CHEBYSHEV_K
    mode: str = CHEBYSHEV
    kind: str = "gwnn"
    topology: str = "given"
    hidden: Tuple[int, ...] = DEFAULT_HIDDEN
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    seed: int = 0
    data: Optional[str] = None
    checkpoint: Optional[str] = None
    out: Optional[str] = None

    def validate(self) -> None:
        """Range checks that do not depend on any input data."""
        if not 0 < self.alpha <= 100:
            raise ConfigError(f"alpha must lie in (0, 100], got {self.alpha}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.patch < 1:
            raise ConfigError(f"patch must be >= 1, got {self.patch}")
        if self.mode not in (EXACT, CHEBYSHEV):
            raise ConfigError(f"mode must be '{EXACT}' or '{CHEBYSHEV}', got {self.mode!r}")
        if self.kind not in BRANCH_KINDS:
            raise ConfigError(f"kind must be one of {BRANCH_KINDS}, got {self.kind!r}")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.lam < 0 or any(lam < 0 for lam in self.lambdas):
            raise ConfigError("lambda values must be >= 0")
        if any(width < 1 for width in self.hidden):
            raise ConfigError(f"hidden widths must be >= 1, got {list(self.hidden)}")
        try:
            for scales in (self.scales, *self.scale_sets):
                validate_scales(scales)
        except InvalidModel as e:
            raise ConfigError(str(e)) from e


# Utility functions
def float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def nested_float_list(text: str) -> Tuple[Tuple[float, ...], ...]:
    return tuple(float_list(group) for group in text.split(";") if group.strip())


def _optional_str(text: str) -> Optional[str]:
    return text or None


# file keys differ from field names only where the field name is a python keyword
KEY_ALIASES = {"lambda": "lam"}
PARSERS: Dict[str, Callable[[str], Any]] = {
    "scales": float_list,
    "scale_sets": nested_float_list,
    "lam": float,
    "lambdas": float_list,
    "alpha": float,
    "patch": int,
    "k": int,
    "mode": str,
    "kind": str,
    "topology": str,
    "hidden": int_list,
    "learning_rate": float,
    "beta1": float,
    "beta2": float,
    "epochs": int,
    "batch_size": int,
    "train_fraction": float,
    "seed": int,
    "data": _optional_str,
    "checkpoint": _optional_str,
    "out": _optional_str,
}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse ``key = value`` lines into typed field values."""
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        name = KEY_ALIASES.get(key, key)
        if name not in PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if name in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[name] = PARSERS[name](value)
        except ValueError as e:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {value!r}") from e
    return values


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Load configuration values from a file; raises OSError if it cannot be read."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    values = parse_config_text(text, source=str(path))
    logger.debug("loaded %d config values from %s", len(values), path)
    return values


def resolve_config(
    file_values: Optional[Mapping[str, Any]] = None,
    flag_values: Optional[Mapping[str, Any]] = None,
    defaults: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """Apply flag > file > ``defaults`` > built-in precedence; flags set to None are treated as absent.

    ``defaults`` lets a command override built-in defaults (the wavelet dump
    defaults to exact operators) without shadowing the configuration file.
    """
    merged: Dict[str, Any] = dict(defaults or {})
    merged.update(file_values or {})
    merged.update({key: value for key, value in (flag_values or {}).items() if value is not None})
    unknown = sorted(set(merged) - set(PARSERS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    config = replace(ExperimentConfig(), **merged)
    config.validate()
    return config
