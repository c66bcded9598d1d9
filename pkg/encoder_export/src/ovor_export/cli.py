"""Command line entry point for the export tool.

    ovor-export text --vocabulary vocab.json --out cache/text
    ovor-export image --crops out/crops --out cache/image
    ovor-export features --crops out/crops --out cache/features
    ovor-export merge cache/text/manifest.json cache/image/manifest.json --out cache

Use --backend stub for an offline dry run without pretrained weights.
"""

from __future__ import annotations

import argparse
import sys

from ovor_export.backends import make_backend
from ovor_export.errors import ExportError, ModelUnavailableError
from ovor_export.export import (
    export_cnn_features,
    export_image_embeddings,
    export_text_embeddings,
    merge_manifests,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EXPORT = 3
EXIT_MODEL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ovor-export")
    sub = parser.add_subparsers(dest="command", required=True)

    text = sub.add_parser("text", help="export prompt text embeddings")
    text.add_argument("--vocabulary", required=True)
    text.add_argument("--out", required=True)
    text.add_argument("--backend", default="clip", choices=["clip", "stub"])
    text.add_argument("--seed", type=int, default=0)

    for name, help_text in (
        ("image", "export CLIP image embeddings for localized crops"),
        ("features", "export EfficientNet-B0 feature maps for localized crops"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--crops", required=True)
        p.add_argument("--out", required=True)
        default = "clip" if name == "image" else "efficientnet"
        p.add_argument("--backend", default=default, choices=[default, "stub"])
        p.add_argument("--seed", type=int, default=0)

    merge = sub.add_parser("merge", help="combine manifests into one cache manifest")
    merge.add_argument("manifests", nargs="+")
    merge.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "merge":
            manifest = merge_manifests(args.manifests, args.out)
        else:
            backend = make_backend(args.backend, seed=args.seed)
            if args.command == "text":
                manifest = export_text_embeddings(args.vocabulary, args.out, backend)
            elif args.command == "image":
                manifest = export_image_embeddings(args.crops, args.out, backend)
            else:
                manifest = export_cnn_features(args.crops, args.out, backend)
    except ModelUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ExportError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPORT
    print(f"exported {len(manifest.entries)} tensors ({len(manifest.failures)} failures)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
