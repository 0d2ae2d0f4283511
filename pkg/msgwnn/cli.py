"""
msgwnn command line.

    msgwnn [--config FILE] [--seed N] [--log-level LEVEL] [--trace] COMMAND ...

Commands: build-graph, wavelet, synth, train, eval, ablate, embed.
Exit codes: 0 success, 2 invalid arguments or configuration, 3 file-system
errors, 4 validation or numerical failures.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from msgwnn import __version__
from msgwnn.checkpoint import load_checkpoint, save_checkpoint
from msgwnn.config import (
    ExperimentConfig,
    float_list,
    int_list,
    load_config_file,
    nested_float_list,
    resolve_config,
)
from msgwnn.errors import ConfigError, ConvergenceFailure, ValidationError
from msgwnn.graph import hop_distances, load_graph, normalized_laplacian, save_graph
from msgwnn.graph_build import EdgeRule, build_graph, read_ppm
from msgwnn.layers import EXACT
from msgwnn.model import LabeledGraph, ModelConfig
from msgwnn.spectral import (
    eigendecompose,
    receptive_field,
    wavelet_basis_chebyshev,
    wavelet_basis_exact,
    wavelet_column,
    wavelet_mass_within,
)
from msgwnn.synthdata import ANNOTATIONS, SynthSpec, generate, load_dataset, save_dataset, split
from msgwnn.telemetry import configure_tracing, tracer
from msgwnn.training import TrainConfig, ablate_lambda, ablate_scales, evaluate, fit

logger = logging.getLogger(__name__)

# Constants
OUTPUT_FORMAT = 1
SUPPORT_THRESHOLD = 1e-3
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
TRAIN_PART = "train"
TEST_PART = "test"


# Utility functions
def _require_file(path: Optional[str], what: str) -> Path:
    """Fail before any work if an input path is missing."""
    if path is None:
        raise ConfigError(f"missing required path: {what}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _output_path(path: Optional[str], what: str) -> Path:
    if path is None:
        raise ConfigError(f"missing required path: {what}")
    path = Path(path)
    if path.parent and not path.parent.exists():
        raise FileNotFoundError(f"directory for {what} does not exist: {path.parent}")
    return path


def _dataset_part(root: Path, part: str) -> Path:
    """``root/part`` when ``root`` holds a train/test split, else ``root`` itself."""
    candidate = root / part
    return candidate if (candidate / "manifest.json").exists() else root


def _emit_json(document: Dict, out: Optional[str]) -> None:
    text = json.dumps(document, indent=2)
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def model_config(config: ExperimentConfig) -> ModelConfig:
    return ModelConfig(
        scales=tuple(config.scales),
        hidden=tuple(config.hidden),
        mode=config.mode,
        k=config.k,
        kind=config.kind,
        topology=config.topology,
        alpha=config.alpha,
    )


def train_config(config: ExperimentConfig) -> TrainConfig:
    return TrainConfig(
        lam=config.lam,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=config.seed,
    )


# Commands
def cmd_build_graph(args: argparse.Namespace, config: ExperimentConfig) -> int:
    image_path = _require_file(args.image, "--image")
    out = _output_path(config.out, "--out")
    graph = build_graph(read_ppm(image_path), rule=EdgeRule(config.alpha), patch=config.patch)
    save_graph(graph, out, embeddings_csv=args.embeddings_csv)
    logger.info("graph with %d nodes and %d edges written to %s", graph.n, graph.edge_count, out)
    return EXIT_OK


def wavelet_summary(graph, pair, center: int) -> Dict:
    return {
        "scale": pair.scale,
        "center": center,
        "support_size_at_1e-3": len(receptive_field(pair, center, SUPPORT_THRESHOLD)),
        "mass_within_1hop": wavelet_mass_within(pair, graph, center, 1),
        "mass_within_2hop": wavelet_mass_within(pair, graph, center, 2),
    }


def cmd_wavelet(args: argparse.Namespace, config: ExperimentConfig) -> int:
    graph = load_graph(_require_file(args.graph, "--graph"))
    out_dir = Path(config.out or ".")
    if not out_dir.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {out_dir}")
    hop_distances(graph, args.center)

    laplacian = normalized_laplacian(graph)
    decomposition = eigendecompose(laplacian) if config.mode == EXACT else None
    summaries = []
    for scale in args.wavelet_scales:
        if decomposition is not None:
            pair = wavelet_basis_exact(decomposition, scale)
        else:
            pair = wavelet_basis_chebyshev(laplacian, scale, config.k)
        column = wavelet_column(pair, args.center)
        csv_path = out_dir / f"wavelet_center{args.center}_s{scale:g}.csv"
        with open(csv_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["node_index", "wavelet_value"])
            for node in np.flatnonzero(np.abs(column) > args.threshold):
                writer.writerow([int(node), repr(float(column[node]))])
        summaries.append(wavelet_summary(graph, pair, args.center))
        logger.info("scale %g: support %d nodes", scale, summaries[-1]["support_size_at_1e-3"])
    _emit_json({"format": OUTPUT_FORMAT, "summaries": summaries}, str(out_dir / "wavelet_summary.json"))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, config: ExperimentConfig) -> int:
    out = Path(_output_path(config.out, "--out"))
    spec = SynthSpec(
        height=args.height,
        width=args.width,
        classes=args.classes,
        blob_scales=tuple(args.blob_scales),
        noise_sigma=args.noise_sigma,
        samples_per_class=args.samples_per_class,
        seed=config.seed,
        topology=args.synth_topology,
        alpha=config.alpha,
        annotation=args.annotation,
    )
    dataset = generate(spec)
    train_set, test_set = split(dataset, config.train_fraction, seed=config.seed)
    save_dataset(train_set, out / TRAIN_PART)
    save_dataset(test_set, out / TEST_PART)
    logger.info("synthetic dataset: %d train / %d test graphs in %s", len(train_set), len(test_set), out)
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: ExperimentConfig) -> int:
    data = _dataset_part(_require_file(config.data, "--data"), TRAIN_PART)
    checkpoint = _output_path(config.checkpoint, "--checkpoint")
    dataset = load_dataset(data)
    result = fit(dataset, model_config(config), train_config(config))
    lines = [json.dumps(metrics.to_dict()) for metrics in result.history]
    if config.out is None:
        for line in lines:
            print(line)
    else:
        Path(config.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    save_checkpoint(result.model, checkpoint)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: ExperimentConfig) -> int:
    data = _dataset_part(_require_file(config.data, "--data"), TEST_PART)
    model = load_checkpoint(_require_file(config.checkpoint, "--checkpoint"))
    report = evaluate(model, load_dataset(data))
    _emit_json(report.to_dict(), config.out)
    return EXIT_OK


def _ablation_data(config: ExperimentConfig) -> Tuple[List[LabeledGraph], List[LabeledGraph]]:
    root = _require_file(config.data, "--data")
    train_dir, test_dir = _dataset_part(root, TRAIN_PART), _dataset_part(root, TEST_PART)
    if train_dir != test_dir:
        return load_dataset(train_dir), load_dataset(test_dir)
    return split(load_dataset(root), config.train_fraction, seed=config.seed)


def cmd_ablate(args: argparse.Namespace, config: ExperimentConfig) -> int:
    train_set, test_set = _ablation_data(config)
    if args.param == "scales":
        rows = ablate_scales(config.scale_sets, train_set, test_set, model_config(config), train_config(config))
    else:
        rows = ablate_lambda(config.lambdas, train_set, test_set, model_config(config), train_config(config))
    for row in rows:
        logger.info("%-40s %.4f", row.label, row.accuracy)
    _emit_json({"format": OUTPUT_FORMAT, "param": args.param, "rows": [r.to_dict() for r in rows]}, config.out)
    return EXIT_OK


def cmd_embed(args: argparse.Namespace, config: ExperimentConfig) -> int:
    graph = load_graph(_require_file(args.graph, "--graph"))
    model = load_checkpoint(_require_file(config.checkpoint, "--checkpoint"))
    out_dir = Path(config.out or ".")
    if not out_dir.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {out_dir}")
    for branch, hidden in enumerate(model.node_embeddings(graph)):
        path = out_dir / f"embeddings_branch{branch}.csv"
        np.savetxt(path, hidden, delimiter=",", fmt="%.17g")
        logger.info("branch %d embeddings (%d x %d) written to %s", branch, *hidden.shape, path)
    return EXIT_OK


COMMANDS = {
    "build-graph": cmd_build_graph,
    "wavelet": cmd_wavelet,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "embed": cmd_embed,
}

# per-command defaults that sit below the config file
COMMAND_DEFAULTS = {
    "wavelet": {"mode": EXACT},
}

# argparse dest -> ExperimentConfig key for flags that override the config file
CONFIG_FLAGS = (
    "scales",
    "scale_sets",
    "lam",
    "lambdas",
    "alpha",
    "patch",
    "k",
    "mode",
    "kind",
    "topology",
    "hidden",
    "learning_rate",
    "beta1",
    "beta2",
    "epochs",
    "batch_size",
    "train_fraction",
    "seed",
    "data",
    "checkpoint",
    "out",
)


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scales", type=float_list, help="branch scales, e.g. 0.5,1.0,1.5")
    parser.add_argument("--hidden", type=int_list, help="hidden widths, e.g. 256,128")
    parser.add_argument("--mode", choices=("exact", "chebyshev"))
    parser.add_argument("--k", type=int, help="Chebyshev order")
    parser.add_argument("--kind", choices=("gwnn", "gcn"))
    parser.add_argument("--topology", choices=("given", "similarity"))
    parser.add_argument("--alpha", type=float, help="percentile for similarity topology")
    parser.add_argument("--lambda", dest="lam", type=float, help="node-loss weight")
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--beta1", type=float)
    parser.add_argument("--beta2", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msgwnn",
        description="Multi-scale graph wavelet neural networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value experiment file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    parser.add_argument("--trace", action="store_true", help="print tracing spans to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="patch graph from a PPM image")
    p.add_argument("--image", required=True)
    p.add_argument("--patch", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out")
    p.add_argument("--embeddings-csv", action="store_true", help="store embeddings in a sibling CSV")

    p = sub.add_parser("wavelet", help="dump wavelets around one node")
    p.add_argument("--graph", required=True)
    p.add_argument("--scales", type=float_list, required=True, dest="wavelet_scales")
    p.add_argument("--center", type=int, required=True)
    p.add_argument("--threshold", type=float, default=SUPPORT_THRESHOLD)
    p.add_argument("--mode", choices=("exact", "chebyshev"), help="default: exact")
    p.add_argument("--k", type=int)
    p.add_argument("--out", help="output directory (default: current directory)")

    p = sub.add_parser("synth", help="generate the synthetic multi-scale dataset")
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--blob-scales", type=int_list, default=(1, 2, 4))
    p.add_argument("--noise-sigma", type=float, default=0.1)
    p.add_argument("--samples-per-class", type=int, default=40)
    p.add_argument("--synth-topology", dest="synth_topology", choices=("lattice", "similarity"), default="lattice")
    p.add_argument("--annotation", choices=ANNOTATIONS, default="lesion", help="node labels: lesion or broadcast")
    p.add_argument("--alpha", type=float)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--out")

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_model_flags(p)
    p.add_argument("--data")
    p.add_argument("--checkpoint")
    p.add_argument("--out", help="metrics JSON lines (default: stdout)")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--data")
    p.add_argument("--checkpoint")
    p.add_argument("--out", help="report JSON (default: stdout)")

    p = sub.add_parser("ablate", help="scale or lambda ablation")
    _add_model_flags(p)
    p.add_argument("--param", choices=("scales", "lambda"), default="scales")
    p.add_argument("--scale-sets", type=nested_float_list, help="e.g. '0.5;0.5,1.0;0.5,1.0,1.5'")
    p.add_argument("--lambdas", type=float_list)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--data")
    p.add_argument("--out")

    p = sub.add_parser("embed", help="export penultimate node embeddings")
    p.add_argument("--graph", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--out", help="output directory (default: current directory)")
    return parser


def resolve_args(args: argparse.Namespace) -> ExperimentConfig:
    file_values: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    flags = {key: getattr(args, key, None) for key in CONFIG_FLAGS}
    return resolve_config(file_values, flags, COMMAND_DEFAULTS.get(args.command))


def run(args: argparse.Namespace) -> int:
    config = resolve_args(args)
    with tracer.start_as_current_span(f"cli.{args.command}") as span:
        span.set_attribute("seed", config.seed)
        return COMMANDS[args.command](args, config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    configure_tracing(console=args.trace)
    torch.set_num_threads(1)

    try:
        return run(args)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except (ValidationError, ConvergenceFailure) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_VALIDATION
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_IO
    except ValueError as e:
        logger.error("invalid argument: %s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
