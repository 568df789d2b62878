"""Task losses for structured learning, with their per-frame decompositions."""
from __future__ import annotations

import enum

import numpy as np

from .core import Segmentation, check_labels, labels_to_segments, segments_to_labels


class Loss(enum.Enum):
    HAMMING = "hamming"
    OVERLAP = "overlap"


def hamming_loss(y_star, y) -> int:
    """Number of frames where the two labelings disagree."""
    y_star, y = check_labels(y_star), check_labels(y)
    if y_star.shape != y.shape:
        raise ValueError(f"length mismatch: {y_star.size} vs {y.size}")
    return int(np.count_nonzero(y_star != y))


def overlap_loss(gt: Segmentation, y) -> float:
    """Sum over ground-truth segments of the fraction of frames predicted wrong."""
    y = check_labels(y)
    if gt.total_frames != y.size:
        raise ValueError(f"length mismatch: {gt.total_frames} vs {y.size}")
    total = 0.0
    for seg in gt:
        hits = np.count_nonzero(y[seg.start : seg.end] == seg.label)
        total += 1.0 - hits / seg.duration
    return total


def loss_value(kind: Loss, y_star, y) -> float:
    if kind is Loss.HAMMING:
        return float(hamming_loss(y_star, y))
    return overlap_loss(labels_to_segments(y_star), y)


def loss_table(y_star, kind: Loss, num_classes: int) -> np.ndarray:
    """T x C cost of labeling frame t with class c.

    Both losses decompose over frames: Hamming charges 1 per wrong frame,
    the overlap loss charges 1/|segment| per wrong frame of that
    ground-truth segment.
    """
    y_star = check_labels(y_star, num_classes)
    T = y_star.size
    wrong = np.ones((T, num_classes))
    wrong[np.arange(T), y_star] = 0.0
    if kind is Loss.HAMMING:
        return wrong
    seg = labels_to_segments(y_star)
    per_frame = np.repeat(1.0 / np.array(seg.durations, dtype=float), seg.durations)
    return wrong * per_frame[:, None]


__all__ = ["Loss", "hamming_loss", "overlap_loss", "loss_value", "loss_table", "segments_to_labels"]
