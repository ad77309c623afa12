"""Detection data model, file-backed detector stub and evaluation metrics.

The 2D detector itself is out of process: detections are read back from
per-frame record files.  The metrics here (precision, recall, AP, mAP)
use class-aware greedy matching in descending confidence with all-point
precision/recall interpolation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import MissingFrame, NoClasses, ZeroGroundTruth

IOU_SWEEP = [round(0.50 + 0.05 * i, 2) for i in range(10)]  # 0.50:0.05:0.95


class ClassLabel(str, Enum):
    HOOK = "hook"
    MIC = "mic"
    MIC_FRAME = "mic_frame"
    HUMAN = "human"


@dataclass(frozen=True)
class Detection:
    """A class-labeled 2D box in pixel coordinates with a confidence score."""

    bbox: tuple  # (u_min, v_min, u_max, v_max)
    label: ClassLabel
    confidence: float = 1.0

    def __post_init__(self):
        u0, v0, u1, v1 = self.bbox
        if not (u0 < u1 and v0 < v1):
            raise ValueError(f"degenerate bbox {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def center(self):
        u0, v0, u1, v1 = self.bbox
        return (0.5 * (u0 + u1), 0.5 * (v0 + v1))


def iou(a, b) -> float:
    """Intersection-over-union of two (u_min, v_min, u_max, v_max) boxes."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


@dataclass
class MatchResult:
    """Per-class TP/FP flags (confidence-descending) and FN counts."""

    flags: dict  # label -> list of (confidence, is_tp)
    fn: dict  # label -> missed ground-truth count
    gt_count: dict  # label -> total ground-truth count


def match_detections(dets, gts, iou_thresh: float = 0.5) -> MatchResult:
    """Greedy confidence-descending matching of detections to ground truth.

    A detection is TP when its best same-class unmatched GT has
    IoU >= iou_thresh; each GT is consumed by at most one detection.
    """
    if not 0 < iou_thresh <= 1:
        raise ValueError("iou_thresh must be in (0, 1]")
    labels = {d.label for d in dets} | {g.label for g in gts}
    flags = {}
    fn = {}
    gt_count = {}
    for label in labels:
        class_dets = sorted(
            (d for d in dets if d.label == label), key=lambda d: -d.confidence
        )
        class_gts = [g for g in gts if g.label == label]
        used = [False] * len(class_gts)
        out = []
        for d in class_dets:
            best, best_iou = -1, 0.0
            for j, g in enumerate(class_gts):
                if used[j]:
                    continue
                v = iou(d.bbox, g.bbox)
                if v > best_iou:
                    best, best_iou = j, v
            if best >= 0 and best_iou >= iou_thresh:
                used[best] = True
                out.append((d.confidence, True))
            else:
                out.append((d.confidence, False))
        flags[label] = out
        fn[label] = used.count(False)
        gt_count[label] = len(class_gts)
    return MatchResult(flags, fn, gt_count)


def merge_matches(results) -> MatchResult:
    """Pool per-frame match results into one dataset-level result."""
    flags, fn, gt_count = {}, {}, {}
    for r in results:
        for label, fl in r.flags.items():
            flags.setdefault(label, []).extend(fl)
            fn[label] = fn.get(label, 0) + r.fn[label]
            gt_count[label] = gt_count.get(label, 0) + r.gt_count[label]
    for label in flags:
        flags[label].sort(key=lambda cf: -cf[0])
    return MatchResult(flags, fn, gt_count)


def precision_recall(m: MatchResult):
    """Per-class (precision, recall); zero-denominator convention is 0."""
    out = {}
    for label, fl in m.flags.items():
        tp = sum(1 for _, ok in fl if ok)
        fp = len(fl) - tp
        fn = m.fn[label]
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        out[label] = (p, r)
    return out


def average_precision(tp_fp_sequence, gt_count: int) -> float:
    """Area under the interpolated precision-recall curve.

    tp_fp_sequence is confidence-descending booleans.  Precision at each
    recall level is replaced by the maximum precision at any recall at
    least that large, then integrated over the observed recall steps.
    """
    if gt_count == 0:
        raise ZeroGroundTruth("AP undefined with no ground-truth boxes")
    if not tp_fp_sequence:
        return 0.0
    tp = np.cumsum([1.0 if ok else 0.0 for ok in tp_fp_sequence])
    fp = np.cumsum([0.0 if ok else 1.0 for ok in tp_fp_sequence])
    recall = tp / gt_count
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_r = 0.0
    ap = 0.0
    for r, p in zip(recall, envelope):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def ap_from_match(m: MatchResult, label) -> float:
    return average_precision([ok for _, ok in m.flags.get(label, [])], m.gt_count[label])


def mean_ap(per_class_ap: dict) -> float:
    """Arithmetic mean of per-class AP values."""
    if not per_class_ap:
        raise NoClasses("mean AP over an empty class set")
    return float(sum(per_class_ap.values()) / len(per_class_ap))


def evaluate_detections(frames, iou_thresholds=None):
    """Full dataset evaluation.

    frames: iterable of (detections, ground_truths) per image.  Returns a
    dict with per-class P/R/AP50/AP50-95 and macro means.
    """
    if iou_thresholds is None:
        iou_thresholds = IOU_SWEEP
    frames = list(frames)
    merged = {
        t: merge_matches([match_detections(d, g, t) for d, g in frames])
        for t in iou_thresholds
    }
    base_t = iou_thresholds[0]
    base = merged[base_t]
    classes = sorted(l for l, n in base.gt_count.items() if n > 0)
    report = {"classes": {}, "iou_thresholds": list(iou_thresholds)}
    pr = precision_recall(base)
    for label in classes:
        aps = [ap_from_match(merged[t], label) for t in iou_thresholds]
        p, r = pr.get(label, (0.0, 0.0))
        report["classes"][label.value] = {
            "precision": p,
            "recall": r,
            "ap50": aps[0],
            "ap50_95": float(np.mean(aps)),
        }
    if classes:
        rows = report["classes"].values()
        report["mean"] = {
            "precision": float(np.mean([c["precision"] for c in rows])),
            "recall": float(np.mean([c["recall"] for c in rows])),
            "ap50": mean_ap({l: report["classes"][l.value]["ap50"] for l in classes}),
            "ap50_95": float(np.mean([c["ap50_95"] for c in rows])),
        }
    return report


# --- detection files --------------------------------------------------------


def load_detections(path):
    doc = json.loads(Path(path).read_text())
    return [
        Detection(tuple(float(x) for x in d["bbox"]), ClassLabel(d["class"]),
                  float(d.get("confidence", 1.0)))
        for d in doc["detections"]
    ]


def save_detections(dets, path) -> None:
    doc = {
        "detections": [
            {
                "class": d.label.value,
                "bbox": [float(x) for x in d.bbox],
                "confidence": float(d.confidence),
            }
            for d in dets
        ]
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


class FileDetector:
    """Detector stub that replays recorded per-frame detection files."""

    def __init__(self, frames: dict):
        # frames: timestamp -> path of the recorded detections file
        self._frames = dict(frames)

    def detect(self, image_ref, frame_ts):
        if frame_ts not in self._frames:
            raise MissingFrame(f"no recorded detections for t={frame_ts}")
        return load_detections(self._frames[frame_ts])
