"""Batch orchestration: resumable file-to-file pipeline stages.

Every stage reads the previous stage's outputs from the run's output
directory and writes its own, so stages are individually testable and a
monolithic run is literally the composition of the stages (bit-identical
outputs by construction). All output files embed a format version and
the config hash.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ovor import align_mlp, imageio, matcher, ovt, regions, shared_space
from ovor.config import ConfigError, RunConfig
from ovor.encoders import FileCacheEncoder, MockEncoder, PlantedMockEncoder, region_key
from ovor.errors import FormatError, IntegrityError
from ovor.evaluation import (
    EvalPrediction,
    build_report,
    load_coco_annotations,
    match_to_gt,
    report_to_csv,
    report_to_json,
)
from ovor.prompts import SOMETHING_ELSE, CategorySpec, CategoryTable, build_category_table, load_vocabulary
from ovor.regions import BBox

FORMAT_VERSION = 1
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MASK_SUFFIXES = (".png", ".ovt")


def _json_dump(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _json_load(path, stage: str) -> dict:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{stage}: missing intermediate file {path}")
    data = json.loads(path.read_text())
    if data.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: format_version {data.get('format_version')} != {FORMAT_VERSION}"
        )
    return data


def list_images(config: RunConfig) -> list[dict]:
    """Pair image files with mask files and assign stable integer ids.

    With COCO annotations, ids come from the images array (matched by
    file name); otherwise numeric stems are used directly, falling back
    to the index in sorted name order. Result is sorted by image_id.
    """
    images_dir = Path(config.images_dir)
    masks_dir = Path(config.masks_dir)
    files = sorted(
        p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise ConfigError(f"no images found in {images_dir}")
    name_to_id = {}
    if config.annotations:
        with open(config.annotations) as f:
            coco = json.load(f)
        name_to_id = {im["file_name"]: im["id"] for im in coco.get("images", [])}
    entries = []
    for i, path in enumerate(files):
        if path.name in name_to_id:
            image_id = name_to_id[path.name]
        elif path.stem.isdigit():
            image_id = int(path.stem)
        else:
            image_id = i
        mask_path = None
        for suffix in MASK_SUFFIXES:
            candidate = masks_dir / (path.stem + suffix)
            if candidate.exists():
                mask_path = candidate
                break
        if mask_path is None:
            raise IntegrityError(f"no mask found for image {path.name} in {masks_dir}")
        entries.append(
            {"image_id": image_id, "image_path": str(path), "mask_path": str(mask_path)}
        )
    entries.sort(key=lambda e: e["image_id"])
    return entries


def _load_vocab(config: RunConfig):
    if config.vocabulary:
        return load_vocabulary(config.vocabulary)
    if config.annotations:
        vocab, _ = load_coco_annotations(config.annotations)
        return vocab
    raise ConfigError("either vocabulary or annotations must be given")


def _text_backend(config: RunConfig):
    if config.encoder == "clip-cache" or (
        config.encoder == "mlp" and config.cache_manifest
    ):
        return FileCacheEncoder(config.cache_manifest)
    return MockEncoder(seed=config.seed)


def _load_table(out_dir) -> CategoryTable:
    cats = _json_load(Path(out_dir) / "categories.json", "match")
    specs = [
        CategorySpec(c["name"], c["supercategory"], c["index"])
        for c in cats["categories"]
    ]
    emb = ovt.read_ovt(Path(out_dir) / "text_embeddings.ovt").astype(np.float64)
    if emb.shape[0] != len(specs):
        raise FormatError("text_embeddings.ovt row count != categories.json entries")
    return CategoryTable(categories=specs, embeddings=emb)


def _image_backend(config: RunConfig, out_dir):
    if config.encoder == "mock":
        return MockEncoder(seed=config.seed)
    if config.encoder == "clip-cache":
        return FileCacheEncoder(config.cache_manifest)
    if config.encoder == "planted-mock":
        with open(config.planted_assignment) as f:
            assignment = json.load(f)
        return PlantedMockEncoder(
            _load_table(out_dir), assignment,
            noise=config.planted_noise, seed=config.seed,
        )
    if config.encoder == "mlp":
        params = align_mlp.load_checkpoint(config.mlp_checkpoint)
        feature_backend = (
            FileCacheEncoder(config.cache_manifest)
            if config.feature_backend == "clip-cache"
            else MockEncoder(seed=config.seed)
        )

        class _MlpImageEncoder:
            def encode_image(self, patch, key=None):
                return align_mlp.encode_image_mlp(params, feature_backend, patch, key=key)

        return _MlpImageEncoder()
    raise ConfigError(f"unknown encoder {config.encoder!r}")


def stage_localize(config: RunConfig) -> Path:
    """masks -> regions.json + cropped patches under crops/."""
    out_dir = Path(config.out_dir)
    crops_dir = out_dir / "crops"
    crops_dir.mkdir(parents=True, exist_ok=True)
    images = []
    for entry in list_images(config):
        image = imageio.load_image(entry["image_path"])
        mask = imageio.load_mask(entry["mask_path"])
        regs = regions.extract_regions(
            mask, image, min_area=config.min_area, connectivity=config.connectivity
        )
        reg_rows = []
        for reg in regs:
            key = region_key(entry["image_id"], reg.region_id)
            imageio.save_image(reg.patch, crops_dir / f"{key.replace(':', '_')}.png")
            reg_rows.append(
                {
                    "region_id": reg.region_id,
                    "bbox": reg.bbox.to_list(),
                    "area": reg.component.area,
                    "label": reg.component.label,
                }
            )
        images.append({**entry, "regions": reg_rows})
    path = out_dir / "regions.json"
    _json_dump(
        {"format_version": FORMAT_VERSION, "config_hash": config.config_hash(), "images": images},
        path,
    )
    return path


def stage_embed_text(config: RunConfig) -> Path:
    """vocabulary -> categories.json + text_embeddings.ovt (Avg Phrase rows)."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = build_category_table(_load_vocab(config), _text_backend(config))
    _json_dump(
        {
            "format_version": FORMAT_VERSION,
            "config_hash": config.config_hash(),
            "categories": [
                {"name": c.name, "supercategory": c.supercategory, "index": c.index}
                for c in table.categories
            ],
        },
        out_dir / "categories.json",
    )
    path = out_dir / "text_embeddings.ovt"
    ovt.write_ovt(path, table.embeddings.astype(np.float32))
    return path


def stage_embed_image(config: RunConfig) -> Path:
    """crops -> one N x 512 object-embedding tensor per image."""
    out_dir = Path(config.out_dir)
    objects_dir = out_dir / "objects"
    objects_dir.mkdir(parents=True, exist_ok=True)
    manifest = _json_load(out_dir / "regions.json", "embed-image")
    backend = _image_backend(config, out_dir)
    for entry in manifest["images"]:
        rows = []
        for reg in entry["regions"]:
            key = region_key(entry["image_id"], reg["region_id"])
            patch = imageio.load_image(out_dir / "crops" / f"{key.replace(':', '_')}.png")
            rows.append(backend.encode_image(patch, key=key))
        arr = np.stack(rows) if rows else np.zeros((0, 512))
        ovt.write_ovt(objects_dir / f"{entry['image_id']}.ovt", arr.astype(np.float32))
    return objects_dir


def _match_one_image(config: RunConfig, objs: np.ndarray, table: CategoryTable):
    if objs.shape[0] == 0:
        return []
    if config.svd:
        k = config.k if config.k is not None else len(table)
        obj_s, cat_s, _ = shared_space.project(objs, table.embeddings, k=k)
        return matcher.match_regions(obj_s, cat_s, config.theta)
    return matcher.match_regions(objs, table.embeddings, config.theta)


def stage_project(config: RunConfig) -> Path:
    """Debug dump of per-image latent score matrices under scores/."""
    out_dir = Path(config.out_dir)
    scores_dir = out_dir / "scores"
    scores_dir.mkdir(parents=True, exist_ok=True)
    manifest = _json_load(out_dir / "regions.json", "project")
    table = _load_table(out_dir)
    k = config.k if config.k is not None else len(table)
    for entry in manifest["images"]:
        objs = ovt.read_ovt(out_dir / "objects" / f"{entry['image_id']}.ovt").astype(np.float64)
        _, _, latent = shared_space.project(objs, table.embeddings, k=k)
        ovt.write_ovt(scores_dir / f"{entry['image_id']}.ovt", latent.scores.astype(np.float32))
    return scores_dir


def stage_match(config: RunConfig) -> Path:
    """object + text embeddings -> predictions.jsonl + overlay PNGs."""
    out_dir = Path(config.out_dir)
    overlays_dir = out_dir / "overlays"
    overlays_dir.mkdir(parents=True, exist_ok=True)
    manifest = _json_load(out_dir / "regions.json", "match")
    table = _load_table(out_dir)
    lines = [
        json.dumps(
            {"format_version": FORMAT_VERSION, "config_hash": config.config_hash()},
            sort_keys=True,
        )
    ]
    for entry in manifest["images"]:
        objs = ovt.read_ovt(out_dir / "objects" / f"{entry['image_id']}.ovt").astype(np.float64)
        preds = _match_one_image(config, objs, table)
        bboxes = [BBox(*reg["bbox"]) for reg in entry["regions"]]
        for pred, reg in zip(preds, entry["regions"]):
            order = np.argsort(-pred.probabilities, kind="stable")[:5]
            lines.append(
                json.dumps(
                    {
                        "image_id": entry["image_id"],
                        "region_id": reg["region_id"],
                        "bbox": reg["bbox"],
                        "category": (
                            "DISCARDED" if pred.discarded
                            else table.categories[pred.category_index].name
                        ),
                        "probability": float(pred.probability),
                        "top5": [
                            [table.categories[int(j)].name, float(pred.probabilities[j])]
                            for j in order
                        ],
                    },
                    sort_keys=True,
                )
            )
        image = imageio.load_image(entry["image_path"])
        imageio.render_overlay(
            image, preds, bboxes, table.names, overlays_dir / f"{entry['image_id']}.png"
        )
    path = out_dir / "predictions.jsonl"
    path.write_text("\n".join(lines) + "\n")
    return path


def read_predictions(path, table: CategoryTable) -> list[EvalPrediction]:
    """Parse a predictions.jsonl file back into evaluator inputs."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty predictions file")
    header = json.loads(lines[0])
    if header.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {header.get('format_version')}")
    preds = []
    for line in lines[1:]:
        rec = json.loads(line)
        preds.append(
            EvalPrediction(
                image_id=rec["image_id"],
                region_id=rec["region_id"],
                bbox=BBox(*rec["bbox"]),
                category_index=(
                    -1 if rec["category"] == "DISCARDED" else table.index_of(rec["category"])
                ),
                probability=rec["probability"],
            )
        )
    return preds


def stage_evaluate(config: RunConfig) -> Path:
    """predictions.jsonl + COCO ground truth -> report.json."""
    out_dir = Path(config.out_dir)
    if config.annotations is None:
        raise ConfigError("evaluate requires the annotations config field")
    table = _load_table(out_dir)
    coco_vocab, gts = load_coco_annotations(config.annotations)
    # remap GT category indices into the matching vocabulary by name
    remap = {}
    for spec in coco_vocab:
        if spec.name == SOMETHING_ELSE:
            continue
        try:
            remap[spec.index] = table.index_of(spec.name)
        except KeyError:
            raise IntegrityError(
                f"ground-truth category {spec.name!r} missing from the run vocabulary"
            )
    for gt in gts:
        gt.category_index = remap[gt.category_index]
    preds = read_predictions(out_dir / "predictions.jsonl", table)
    records = match_to_gt(
        preds,
        gts,
        iou_threshold=config.iou_threshold,
        something_else_index=table.index_of(SOMETHING_ELSE),
        mode=config.match_mode,
        something_else_is_fp=config.something_else_is_fp,
    )
    report = build_report(
        records,
        table.categories,
        config={
            "config_hash": config.config_hash(),
            "theta": config.theta,
            "k": config.k,
            "encoder": config.encoder,
            "svd": config.svd,
            "iou_threshold": config.iou_threshold,
            "match_mode": config.match_mode,
            "min_area": config.min_area,
            "connectivity": config.connectivity,
            "seed": config.seed,
        },
    )
    path = out_dir / "report.json"
    path.write_text(report_to_json(report))
    return path


def stage_report(config: RunConfig) -> Path:
    """report.json -> Table-style report.csv."""
    out_dir = Path(config.out_dir)
    report = json.loads((out_dir / "report.json").read_text())
    path = out_dir / "report.csv"
    path.write_text(report_to_csv(report))
    return path


def run_pipeline(config: RunConfig) -> dict:
    """End-to-end run: the literal composition of the pipeline stages."""
    config.validate()
    Path(config.out_dir).mkdir(parents=True, exist_ok=True)
    artifacts = {}
    artifacts["regions"] = stage_localize(config)
    artifacts["text_embeddings"] = stage_embed_text(config)
    artifacts["objects"] = stage_embed_image(config)
    artifacts["predictions"] = stage_match(config)
    if config.annotations is not None:
        artifacts["report"] = stage_evaluate(config)
        artifacts["report_csv"] = stage_report(config)
    return artifacts
