"""Rotated NMS, VOC-style average precision and annotation ingestion.

Annotation files follow the DOTA text layout: one object per line,
"x1 y1 x2 y2 x3 y3 x4 y4 category difficult", with any leading metadata
lines (first token non-numeric) skipped. Detection files carry one line
per detection: "image_id class score cx cy h w theta" (long-edge box
convention), or a quad form "image_id class score x1 y1 ... x4 y4".
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .rotgeom import OrientedBox180, canonicalize180, order_corners, quad_to_box180, rotated_iou

log = logging.getLogger(__name__)


class AnnotationParseError(ValueError):
    """Malformed annotation or detection line; carries the line number."""

    def __init__(self, message, line_no=None):
        super().__init__(f"line {line_no}: {message}" if line_no else message)
        self.line_no = line_no


@dataclass(frozen=True)
class DetectionRecord:
    image_id: str
    class_id: int
    box: OrientedBox180
    score: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class GroundTruthRecord:
    image_id: str
    class_id: int
    box: OrientedBox180
    difficult: bool = False


@dataclass
class EvalReport:
    ap07: dict  # class name -> AP, 11-point interpolation
    ap12: dict  # class name -> AP, area under monotonized PR curve
    map07: float
    map12: float
    pr_curves: dict = field(default_factory=dict)  # class name -> (recall, precision)

    def subset_map(self, class_names, metric="voc12"):
        aps = self.ap12 if metric == "voc12" else self.ap07
        vals = [aps[c] for c in class_names]
        return float(np.mean(vals)) if vals else 0.0

    def to_dict(self):
        return {
            "schema_version": 1,
            "ap07": self.ap07,
            "ap12": self.ap12,
            "map07": self.map07,
            "map12": self.map12,
            "pr_curves": {c: {"recall": list(r), "precision": list(p)} for c, (r, p) in self.pr_curves.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def rotated_nms(dets, iou_thresh=0.1):
    """Greedy descending-score suppression with rotated IoU; stable sort
    (score desc, then input index) makes the result deterministic."""
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept = []
    for i in order:
        if all(rotated_iou(dets[i].box, dets[k].box) <= iou_thresh for k in kept):
            kept.append(i)
    return [dets[i] for i in sorted(kept)]


def _voc07_ap(recall, precision):
    ap = 0.0
    for t in np.linspace(0.0, 1.0, 11):
        mask = recall >= t - 1e-12
        ap += precision[mask].max() if mask.any() else 0.0
    return ap / 11.0


def _voc12_ap(recall, precision):
    r = np.concatenate(([0.0], recall, [1.0]))
    p = np.concatenate(([0.0], precision, [0.0]))
    for i in range(len(p) - 2, -1, -1):
        p[i] = max(p[i], p[i + 1])
    idx = np.where(r[1:] != r[:-1])[0]
    return float(np.sum((r[idx + 1] - r[idx]) * p[idx + 1]))


def compute_ap(dets, gts, iou_thresh=0.5, metric="voc12"):
    """Single-class average precision with greedy score-descending
    matching. Difficult ground truths neither count toward recall nor
    turn their matches into false positives."""
    if metric not in ("voc07", "voc12"):
        raise ValueError(f"unknown metric {metric!r}")
    ap, _, _ = _pr_and_ap(dets, gts, iou_thresh)
    return ap[metric]


def _pr_and_ap(dets, gts, iou_thresh=0.5):
    n_pos = sum(1 for g in gts if not g.difficult)
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    by_image = {}
    for gi, g in enumerate(gts):
        by_image.setdefault(g.image_id, []).append(gi)
    matched = set()
    tp = np.zeros(len(order))
    fp = np.zeros(len(order))
    for rank, di in enumerate(order):
        d = dets[di]
        best_iou, best_gi = 0.0, -1
        for gi in by_image.get(d.image_id, []):
            iou = rotated_iou(d.box, gts[gi].box)
            if iou > best_iou:
                best_iou, best_gi = iou, gi
        if best_gi >= 0 and best_iou >= iou_thresh:
            if gts[best_gi].difficult:
                continue  # neither TP nor FP
            if best_gi not in matched:
                matched.add(best_gi)
                tp[rank] = 1
            else:
                fp[rank] = 1
        else:
            fp[rank] = 1
    tp_c = np.cumsum(tp)
    fp_c = np.cumsum(fp)
    recall = tp_c / n_pos if n_pos > 0 else np.zeros(len(order))
    precision = np.where(tp_c + fp_c > 0, tp_c / np.maximum(tp_c + fp_c, 1e-12), 0.0)
    if len(order) == 0 or n_pos == 0:
        return {"voc07": 0.0, "voc12": 0.0}, recall, precision
    return {"voc07": _voc07_ap(recall, precision), "voc12": _voc12_ap(recall, precision)}, recall, precision


def evaluate(dets, gts, class_names, iou_thresh=0.5):
    """Per-class AP under both conventions plus the mean over classes."""
    ap07, ap12, curves = {}, {}, {}
    for cid, name in enumerate(class_names):
        cd = [d for d in dets if d.class_id == cid]
        cg = [g for g in gts if g.class_id == cid]
        ap, recall, precision = _pr_and_ap(cd, cg, iou_thresh)
        ap07[name] = ap["voc07"]
        ap12[name] = ap["voc12"]
        curves[name] = (recall.tolist(), precision.tolist())
    map07 = float(np.mean(list(ap07.values()))) if ap07 else 0.0
    map12 = float(np.mean(list(ap12.values()))) if ap12 else 0.0
    return EvalReport(ap07=ap07, ap12=ap12, map07=map07, map12=map12, pr_curves=curves)


def _is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def ingest_dota(text, image_id, class_table, strict=False):
    """Parse one DOTA annotation file into ground-truth records.

    Leading metadata lines (first token non-numeric) are skipped. Each
    quad is canonically ordered and converted to its minimum enclosing
    rotated rectangle. Unknown categories raise in strict mode and are
    skipped with a warning otherwise.
    """
    records = []
    body_started = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if not body_started and not _is_number(tokens[0]):
            continue  # header / metadata line
        body_started = True
        if len(tokens) != 10:
            raise AnnotationParseError(
                f"expected 8 coordinates, category and difficult flag, got {len(tokens)} tokens", line_no
            )
        try:
            coords = [float(t) for t in tokens[:8]]
        except ValueError as exc:
            raise AnnotationParseError(str(exc), line_no) from None
        category = tokens[8]
        if tokens[9] not in ("0", "1"):
            raise AnnotationParseError(f"difficult flag must be 0 or 1, got {tokens[9]!r}", line_no)
        if category not in class_table:
            if strict:
                raise AnnotationParseError(f"unknown category {category!r}", line_no)
            log.warning("line %d: skipping unknown category %r", line_no, category)
            continue
        quad = order_corners(np.asarray(coords).reshape(4, 2))
        records.append(
            GroundTruthRecord(
                image_id=image_id,
                class_id=class_table[category],
                box=quad_to_box180(quad),
                difficult=tokens[9] == "1",
            )
        )
    return records


def parse_detections(text, class_table, quad_form=False):
    """Parse a detection file; see module docstring for the line formats."""
    dets = []
    want = 11 if quad_form else 8
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != want:
            raise AnnotationParseError(f"expected {want} tokens, got {len(tokens)}", line_no)
        image_id, cls_tok, score_tok = tokens[0], tokens[1], tokens[2]
        if cls_tok in class_table:
            cid = class_table[cls_tok]
        elif cls_tok.lstrip("-").isdigit():
            cid = int(cls_tok)
        else:
            raise AnnotationParseError(f"unknown class {cls_tok!r}", line_no)
        try:
            score = float(score_tok)
            nums = [float(t) for t in tokens[3:]]
        except ValueError as exc:
            raise AnnotationParseError(str(exc), line_no) from None
        try:
            if quad_form:
                box = quad_to_box180(order_corners(np.asarray(nums).reshape(4, 2)))
            else:
                cx, cy, h, w, theta = nums
                box = canonicalize180(cx, cy, h, w, theta)
            dets.append(DetectionRecord(image_id=image_id, class_id=cid, box=box, score=score))
        except ValueError as exc:
            raise AnnotationParseError(str(exc), line_no) from None
    return dets
