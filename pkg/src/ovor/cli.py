"""Command-line interface for batch runs and individual pipeline stages.

Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from ovor import align_mlp, ovt
from ovor.config import ConfigError, RunConfig, load_config
from ovor.errors import (
    CorruptCacheError,
    DegenerateEmbeddingError,
    FormatError,
    IntegrityError,
    MissingKeyError,
    OvorError,
    TrainingDivergedError,
)
from ovor.pipeline import (
    run_pipeline,
    stage_embed_image,
    stage_embed_text,
    stage_evaluate,
    stage_localize,
    stage_match,
    stage_project,
    stage_report,
)
from ovor.prompts import CategorySpec, CategoryTable

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _add_common(parser):
    parser.add_argument("--config", help="JSON run-config file")
    parser.add_argument("--encoder", choices=["mock", "clip-cache", "mlp", "planted-mock"])
    parser.add_argument("--svd", choices=["on", "off"])
    parser.add_argument("--k", type=int)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--min-area", type=int, dest="min_area")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", dest="out_dir")


def _config_from_args(args) -> RunConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in ("encoder", "k", "theta", "min_area", "seed", "out_dir")
    }
    if getattr(args, "svd", None) is not None:
        overrides["svd"] = args.svd == "on"
    cfg = load_config(args.config, overrides)
    if cfg.cache_manifest:
        cache_root = os.environ.get("OVOR_CACHE_DIR")
        if cache_root and not Path(cfg.cache_manifest).is_absolute():
            cfg.cache_manifest = str(Path(cache_root) / cfg.cache_manifest)
    return cfg


def _cmd_stage(stage_fn, require_data=True):
    def run(args):
        cfg = _config_from_args(args)
        cfg.validate(require_data=require_data)
        artifact = stage_fn(cfg)
        print(artifact if not isinstance(artifact, dict) else json.dumps(
            {k: str(v) for k, v in artifact.items()}, indent=2, sort_keys=True))
        return EXIT_OK

    return run


def _cmd_train_mlp(args):
    with open(args.manifest) as f:
        manifest = json.load(f)
    samples = manifest["samples"] if isinstance(manifest, dict) else manifest
    embeddings = ovt.read_ovt(args.text_embeddings).astype(np.float64)
    specs = [CategorySpec(f"cat{i}", "object", i) for i in range(embeddings.shape[0])]
    table = CategoryTable(categories=specs, embeddings=embeddings)
    base = Path(args.manifest).parent
    dataset = [
        (ovt.read_ovt(base / s["features"]).astype(np.float64), s["category_index"])
        for s in samples
    ]
    dims = tuple(args.dims) if args.dims else (
        (dataset[0][0].size,) + tuple(align_mlp.DEFAULT_DIMS[1:])
    )
    cfg = align_mlp.TrainConfig(
        margin=args.margin, learning_rate=args.lr, batch_size=args.batch_size,
        epochs=args.epochs, seed=args.seed, distance=args.distance,
    )
    params0 = align_mlp.init_params(dims, seed=args.seed)
    params, curve = align_mlp.train(params0, dataset, table, cfg)
    align_mlp.save_checkpoint(params, args.out, cfg=cfg, epoch=args.epochs)
    Path(args.out, "loss_curve.json").write_text(json.dumps(curve) + "\n")
    print(f"{args.out} (final epoch loss {curve[-1]:.6f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovor", description="Open-vocabulary object recognition batch toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    stages = {
        "run": ("full pipeline: localize, embed, match, evaluate", run_pipeline),
        "localize": ("masks -> regions.json + crops", stage_localize),
        "embed-text": ("vocabulary -> Avg Phrase text embeddings", stage_embed_text),
        "embed-image": ("crops -> object embeddings", stage_embed_image),
        "project": ("dump z-score + SVD latent scores", stage_project),
        "match": ("embeddings -> predictions.jsonl + overlays", stage_match),
        "evaluate": ("predictions + COCO ground truth -> report.json", stage_evaluate),
        "report": ("report.json -> report.csv", stage_report),
    }
    for name, (help_text, fn) in stages.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=_cmd_stage(fn))

    p = sub.add_parser("train-mlp", help="train the alignment MLP from a feature manifest")
    p.add_argument("--manifest", required=True, help="JSON list of {features, category_index}")
    p.add_argument("--text-embeddings", required=True, help="C x D OVT of category embeddings")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--margin", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--distance", default="squared-euclidean",
                   choices=list(align_mlp.DISTANCES))
    p.add_argument("--dims", type=int, nargs=4, help="d0 d1 d2 d3 (default from data)")
    p.set_defaults(func=_cmd_train_mlp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, IntegrityError, MissingKeyError, CorruptCacheError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateEmbeddingError, TrainingDivergedError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OvorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
