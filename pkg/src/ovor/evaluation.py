"""Detection-style evaluation against COCO-format ground truth.

Predictions are greedily matched to ground-truth regions (per image, by
descending probability, highest-IoU-first), then class-wise (macro) and
image-wise (micro) Precision / Recall / Accuracy / F1 / AP are computed.
Accuracy is TP / (TP + FP + FN) since per-class true negatives are
undefined in detection. AP follows the all-points protocol: the mean of
precision-at-rank over the TP ranks, divided by the class's GT count,
reported x100.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from ovor.errors import IntegrityError, InvalidArgumentError
from ovor.prompts import SOMETHING_ELSE, make_vocabulary
from ovor.regions import BBox


@dataclass
class GroundTruthRegion:
    image_id: int
    bbox: BBox
    category_index: int


@dataclass
class EvalPrediction:
    """A prediction as consumed by the evaluator.

    category_index -1 means the matcher discarded the region.
    """

    image_id: int
    region_id: int
    bbox: BBox
    category_index: int
    probability: float

    @property
    def discarded(self) -> bool:
        return self.category_index < 0


@dataclass
class MatchRecord:
    outcome: str  # "TP" | "FP" | "FN"
    prediction: Optional[EvalPrediction]
    gt: Optional[GroundTruthRegion]


def load_coco_annotations(path):
    """Parse a COCO instances file into (vocabulary, ground-truth regions).

    Categories map to dense indices in file order; bboxes convert from
    (x, y, w, h) to inclusive (min_row, min_col, max_row, max_col).
    """
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}")
    for key in ("images", "annotations", "categories"):
        if key not in data:
            raise InvalidArgumentError(f"{path}: missing COCO array {key!r}")
    vocab = make_vocabulary(
        [(c["name"], c.get("supercategory", "object")) for c in data["categories"]]
    )
    id_to_index = {
        c["id"]: i for i, c in enumerate(data["categories"])
    }
    gts = []
    for ann in data["annotations"]:
        cat_id = ann["category_id"]
        if cat_id not in id_to_index:
            raise IntegrityError(
                f"annotation {ann.get('id')} references unknown category_id {cat_id}"
            )
        x, y, w, h = ann["bbox"]
        min_row, min_col = int(math.floor(y)), int(math.floor(x))
        max_row = max(min_row, int(math.ceil(y + h)) - 1)
        max_col = max(min_col, int(math.ceil(x + w)) - 1)
        gts.append(
            GroundTruthRegion(
                image_id=ann["image_id"],
                bbox=BBox(min_row, min_col, max_row, max_col),
                category_index=id_to_index[cat_id],
            )
        )
    return vocab, gts


def bbox_iou(a: BBox, b: BBox) -> float:
    inter_h = min(a.max_row, b.max_row) - max(a.min_row, b.min_row) + 1
    inter_w = min(a.max_col, b.max_col) - max(a.min_col, b.min_col) + 1
    if inter_h <= 0 or inter_w <= 0:
        return 0.0
    inter = inter_h * inter_w
    union = a.height * a.width + b.height * b.width - inter
    return inter / union


def match_to_gt(
    predictions,
    gts,
    iou_threshold: float = 0.5,
    something_else_index: int = None,
    mode: str = "iou",
    something_else_is_fp: bool = False,
) -> list[MatchRecord]:
    """Greedy per-image matching of predictions to ground truth.

    Predictions sorted by probability descending each claim the unmatched
    same-image GT with highest IoU >= threshold. TP iff matched with the
    right category; wrong-category matches and unmatched predictions are
    FP; leftover GT are FN. Discarded predictions never match;
    "something else" assignments abstain by default (configurable FP).
    ``mode="identity"`` requires exact bbox equality instead of IoU.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise InvalidArgumentError("iou_threshold must be in (0, 1]")
    records = []
    gt_by_image = {}
    for gt in gts:
        gt_by_image.setdefault(gt.image_id, []).append(gt)
    matched = {id(gt): False for gt in gts}
    gt_tp = {id(gt): False for gt in gts}

    preds_by_image = {}
    for p in predictions:
        preds_by_image.setdefault(p.image_id, []).append(p)

    for image_id in sorted(preds_by_image):
        preds = sorted(
            preds_by_image[image_id], key=lambda p: (-p.probability, p.region_id)
        )
        candidates = gt_by_image.get(image_id, [])
        for pred in preds:
            if pred.discarded:
                continue
            if something_else_index is not None and pred.category_index == something_else_index:
                if something_else_is_fp:
                    records.append(MatchRecord("FP", pred, None))
                continue
            best, best_iou = None, 0.0
            for gt in candidates:
                if matched[id(gt)]:
                    continue
                if mode == "identity":
                    iou = 1.0 if gt.bbox == pred.bbox else 0.0
                else:
                    iou = bbox_iou(gt.bbox, pred.bbox)
                if iou >= iou_threshold and iou > best_iou:
                    best, best_iou = gt, iou
            if best is None:
                records.append(MatchRecord("FP", pred, None))
            elif best.category_index == pred.category_index:
                matched[id(best)] = True
                gt_tp[id(best)] = True
                records.append(MatchRecord("TP", pred, best))
            else:
                matched[id(best)] = True
                records.append(MatchRecord("FP", pred, best))

    for gt in gts:
        if not gt_tp[id(gt)]:
            records.append(MatchRecord("FN", None, gt))
    return records


def _rates(tp: int, fp: int, fn: int) -> dict:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    accuracy = tp / (tp + fp + fn) if tp + fp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "precision": precision, "recall": recall,
        "accuracy": accuracy, "f1": f1,
        "tp": tp, "fp": fp, "fn": fn,
    }


def _class_counts(records):
    counts = {}
    for rec in records:
        if rec.outcome == "TP":
            c = rec.prediction.category_index
            counts.setdefault(c, [0, 0, 0])[0] += 1
        elif rec.outcome == "FP":
            c = rec.prediction.category_index
            counts.setdefault(c, [0, 0, 0])[1] += 1
        else:
            c = rec.gt.category_index
            counts.setdefault(c, [0, 0, 0])[2] += 1
    return counts


def average_precision(records, category_index: int) -> Optional[float]:
    """All-points AP for one class; None when the class has no GT."""
    n_gt = sum(
        1
        for rec in records
        if (rec.outcome == "TP" and rec.prediction.category_index == category_index)
        or (rec.outcome == "FN" and rec.gt.category_index == category_index)
    )
    if n_gt == 0:
        return None
    ranked = [
        rec
        for rec in records
        if rec.prediction is not None and rec.prediction.category_index == category_index
    ]
    return _ranked_ap(ranked, n_gt)


def _ranked_ap(ranked_records, n_gt: int) -> float:
    ranked = sorted(
        ranked_records,
        key=lambda r: (
            -r.prediction.probability,
            r.prediction.image_id,
            r.prediction.region_id,
        ),
    )
    tp_cum = 0
    ap_sum = 0.0
    for rank, rec in enumerate(ranked, start=1):
        if rec.outcome == "TP":
            tp_cum += 1
            ap_sum += tp_cum / rank
    return ap_sum / n_gt if n_gt else 0.0


def classwise_metrics(records, vocabulary) -> dict:
    """Per-class and macro-averaged metrics over classes present in GT.

    "something else" never counts as a real class.
    """
    counts = _class_counts(records)
    per_class = {}
    macro_keys = ("precision", "recall", "accuracy", "f1")
    macro = {k: 0.0 for k in macro_keys}
    ap_values = []
    n_macro = 0
    for spec in vocabulary:
        if spec.name == SOMETHING_ELSE:
            continue
        tp, fp, fn = counts.get(spec.index, (0, 0, 0))
        rates = _rates(tp, fp, fn)
        ap = average_precision(records, spec.index)
        rates["ap"] = None if ap is None else ap * 100.0
        per_class[spec.name] = rates
        if tp + fn > 0:  # class present in GT
            n_macro += 1
            for k in macro_keys:
                macro[k] += rates[k]
            ap_values.append(ap)
    if n_macro:
        for k in macro_keys:
            macro[k] /= n_macro
    macro["ap"] = (sum(ap_values) / len(ap_values) * 100.0) if ap_values else 0.0
    macro["classes_in_gt"] = n_macro
    return {"per_class": per_class, "macro": macro}


def imagewise_metrics(records) -> dict:
    """Micro metrics over pooled TP/FP/FN, with AP on the pooled ranking."""
    tp = sum(1 for r in records if r.outcome == "TP")
    fp = sum(1 for r in records if r.outcome == "FP")
    fn = sum(1 for r in records if r.outcome == "FN")
    out = _rates(tp, fp, fn)
    n_gt = tp + fn
    ranked = [r for r in records if r.prediction is not None]
    out["ap"] = _ranked_ap(ranked, n_gt) * 100.0 if n_gt else 0.0
    return out


def build_report(records, vocabulary, config: dict = None) -> dict:
    """Deterministic metrics report; serialize with sorted keys."""
    return {
        "format_version": 1,
        "classwise": classwise_metrics(records, vocabulary),
        "imagewise": imagewise_metrics(records),
        "counts": {
            "records": len(records),
            "tp": sum(1 for r in records if r.outcome == "TP"),
            "fp": sum(1 for r in records if r.outcome == "FP"),
            "fn": sum(1 for r in records if r.outcome == "FN"),
        },
        "config": dict(config or {}),
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_to_csv(report: dict) -> str:
    """Table-style CSV with the standard metric columns."""
    lines = ["Metric Type,Avg Precision,Avg Recall,Accuracy,F1,AP"]
    m = report["classwise"]["macro"]
    lines.append(
        "class-wise,{:.3f},{:.3f},{:.3f},{:.3f},{:.1f}".format(
            m["precision"], m["recall"], m["accuracy"], m["f1"], m["ap"]
        )
    )
    i = report["imagewise"]
    lines.append(
        "image-wise,{:.3f},{:.3f},{:.3f},{:.3f},{:.1f}".format(
            i["precision"], i["recall"], i["accuracy"], i["f1"], i["ap"]
        )
    )
    return "\n".join(lines) + "\n"
