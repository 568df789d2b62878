"""Segmentation metrics: segmental edit score, frame accuracy, segment classification."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Segmentation, check_labels, check_scores, labels_to_segments, segments_to_labels


@dataclass(frozen=True)
class EvalReport:
    edit_score: float
    frame_accuracy: float
    classification_accuracy: float | None = None

    def format(self) -> str:
        """Render as in the results tables: edit and accuracies on a 0-100 scale."""
        out = f"Edit: {self.edit_score:.2f} Acc: {100 * self.frame_accuracy:.2f}"
        if self.classification_accuracy is not None:
            out += f" Cls: {100 * self.classification_accuracy:.2f}"
        return out


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance (insert, delete, substitute)."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def _collapsed(seg: Segmentation) -> list[int]:
    labs = seg.labels
    return [l for i, l in enumerate(labs) if i == 0 or l != labs[i - 1]]


def edit_score(gt: Segmentation, pred: Segmentation) -> float:
    """``(1 - lev / max(M, N)) * 100`` over the ordered segment labels.

    Adjacent segments sharing a label are merged first, so only the label
    order matters, never the durations.
    """
    a, b = _collapsed(gt), _collapsed(pred)
    if not a or not b:
        raise ValueError("edit score needs non-empty segmentations")
    return (1.0 - levenshtein(a, b) / max(len(a), len(b))) * 100.0


def frame_accuracy(gt, pred) -> float:
    gt, pred = check_labels(gt), check_labels(pred)
    if gt.shape != pred.shape:
        raise ValueError(f"length mismatch: {gt.size} vs {pred.size}")
    if gt.size == 0:
        raise ValueError("empty label sequences")
    return float(np.mean(gt == pred))


def classify_segments(S, gt: Segmentation) -> list[int]:
    """Class with the highest mean score inside each ground-truth segment."""
    S = check_scores(S)
    if gt.total_frames != S.shape[0]:
        raise ValueError(f"segmentation covers {gt.total_frames} frames, scores have {S.shape[0]}")
    return [int(np.argmax(S[s.start : s.end].mean(axis=0))) for s in gt]


def classification_accuracy(S, gt: Segmentation) -> float:
    pred = classify_segments(S, gt)
    return float(np.mean([p == s.label for p, s in zip(pred, gt)]))


def _drop_label(seg: Segmentation, label: int) -> Segmentation | None:
    kept = [s.label for s in seg if s.label != label]
    if not kept:
        return None
    return Segmentation.from_tuples((l, i, 1) for i, l in enumerate(kept))


def evaluate(
    gt: Segmentation,
    pred: Segmentation,
    scores=None,
    ignore_label: int | None = None,
) -> EvalReport:
    """All metrics for one sequence.

    ``ignore_label`` drops that class from both label orders before the edit
    score and excludes frames whose ground truth has it from the accuracy.
    """
    if gt.total_frames != pred.total_frames:
        raise ValueError(f"length mismatch: {gt.total_frames} vs {pred.total_frames}")
    y_gt, y_pred = segments_to_labels(gt), segments_to_labels(pred)
    cls = None
    if ignore_label is None:
        edit = edit_score(gt, pred)
        acc = frame_accuracy(y_gt, y_pred)
        if scores is not None:
            cls = classification_accuracy(scores, gt)
    else:
        g, p = _drop_label(gt, ignore_label), _drop_label(pred, ignore_label)
        if g is None and p is None:
            edit = 100.0
        elif g is None or p is None:
            edit = 0.0
        else:
            edit = edit_score(g, p)
        keep = y_gt != ignore_label
        acc = float(np.mean(y_gt[keep] == y_pred[keep])) if keep.any() else 1.0
        if scores is not None:
            pred_cls = classify_segments(scores, gt)
            hits = [p == s.label for p, s in zip(pred_cls, gt) if s.label != ignore_label]
            cls = float(np.mean(hits)) if hits else 1.0
    return EvalReport(edit, acc, cls)


__all__ = [
    "EvalReport",
    "levenshtein",
    "edit_score",
    "frame_accuracy",
    "classify_segments",
    "classification_accuracy",
    "evaluate",
    "labels_to_segments",
]
