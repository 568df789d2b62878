"""Domain types shared across the package.

Scores and label sequences are plain numpy arrays validated at the API
boundary; segmentations and transition models are small immutable
dataclasses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

#: Sentinel for transitions that may never be taken (and unreachable DP cells).
FORBIDDEN = -np.inf


class SegmentationError(ValueError):
    """Raised for malformed segmentations or label sequences."""


class InfeasibleError(RuntimeError):
    """No segmentation satisfies the decoding constraints."""


def is_forbidden(x) -> np.ndarray | bool:
    return np.isneginf(x)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def check_scores(S, num_classes: int | None = None) -> np.ndarray:
    """Validate a T x C score matrix and return it as a float array."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise ValueError(f"score matrix must be 2-D, got shape {S.shape}")
    T, C = S.shape
    if T < 1:
        raise ValueError("score matrix needs at least one frame")
    if C < 2:
        raise ValueError(f"score matrix needs at least 2 classes, got {C}")
    if not np.all(np.isfinite(S)):
        raise ValueError("score matrix contains non-finite entries")
    if num_classes is not None and C != num_classes:
        raise ValueError(f"score matrix has {C} classes, expected {num_classes}")
    return S


def check_labels(y, num_classes: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise SegmentationError(f"label sequence must be 1-D, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise SegmentationError("labels must be integers")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise SegmentationError("labels must be non-negative")
    if num_classes is not None and y.size and y.max() >= num_classes:
        raise SegmentationError(f"label {y.max()} out of range for {num_classes} classes")
    return y


class Segment(NamedTuple):
    label: int
    start: int
    duration: int

    @property
    def end(self) -> int:
        """One past the last frame."""
        return self.start + self.duration


@dataclass(frozen=True)
class Segmentation:
    """Contiguous, ordered action segments covering ``total_frames`` frames."""

    segments: tuple[Segment, ...]
    total_frames: int

    def __post_init__(self):
        segs = tuple(Segment(*map(int, s)) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise SegmentationError("segmentation must contain at least one segment")
        pos = 0
        for j, s in enumerate(segs):
            if s.duration < 1:
                raise SegmentationError(f"segment {j} has non-positive duration {s.duration}")
            if s.start != pos:
                raise SegmentationError(
                    f"segment {j} starts at {s.start}, expected {pos} (gap or overlap)"
                )
            if s.label < 0:
                raise SegmentationError(f"segment {j} has negative label")
            pos = s.end
        if pos != self.total_frames:
            raise SegmentationError(
                f"durations sum to {pos} but total_frames is {self.total_frames}"
            )

    @classmethod
    def from_tuples(cls, segments: Iterable[Sequence[int]]) -> "Segmentation":
        segs = tuple(Segment(*s) for s in segments)
        total = segs[-1].end if segs else 0
        return cls(segs, total)

    @classmethod
    def from_boundaries(cls, labels: Sequence[int], starts: Sequence[int], total_frames: int):
        ends = list(starts[1:]) + [total_frames]
        return cls(
            tuple(Segment(l, s, e - s) for l, s, e in zip(labels, starts, ends)),
            total_frames,
        )

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.segments]

    @property
    def durations(self) -> list[int]:
        return [s.duration for s in self.segments]

    def is_strict(self) -> bool:
        labs = self.labels
        return all(a != b for a, b in zip(labs, labs[1:]))

    def to_tuples(self) -> list[tuple[int, int, int]]:
        return [tuple(s) for s in self.segments]


@dataclass(frozen=True)
class TransitionModel:
    """Log transition matrix between segment classes plus a per-class log prior.

    Forbidden entries hold :data:`FORBIDDEN` (``-inf``).
    """

    log_transition: np.ndarray
    log_prior: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.log_transition, dtype=float)
        p = np.asarray(self.log_prior, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"transition matrix must be square, got {A.shape}")
        if A.shape[0] < 2:
            raise ValueError("need at least 2 classes")
        if p.shape != (A.shape[0],):
            raise ValueError(f"prior shape {p.shape} does not match {A.shape[0]} classes")
        for name, a in (("transition", A), ("prior", p)):
            if np.any(np.isnan(a)) or np.any(np.isposinf(a)):
                raise ValueError(f"{name} entries must be finite or FORBIDDEN")
        object.__setattr__(self, "log_transition", _frozen(A))
        object.__setattr__(self, "log_prior", _frozen(p))

    @property
    def num_classes(self) -> int:
        return self.log_transition.shape[0]

    @classmethod
    def uniform(cls, num_classes: int) -> "TransitionModel":
        """All transitions scored 0 except forbidden self-transitions."""
        A = np.zeros((num_classes, num_classes))
        np.fill_diagonal(A, FORBIDDEN)
        return cls(A, np.zeros(num_classes))

    @classmethod
    def zeros(cls, num_classes: int) -> "TransitionModel":
        return cls(np.zeros((num_classes, num_classes)), np.zeros(num_classes))


@dataclass(frozen=True)
class ScoreTable:
    """Forward-pass table of the constrained decoder.

    ``values[k, t, c]`` is the best score of a labeling of frames ``0..t`` with
    ``k + 1`` segments whose last segment has class ``c``; unreachable cells
    hold ``-inf``. ``prev_class[k, t, c]`` is ``STAY`` when the cell extends the
    current segment, ``START`` when it opens the first segment, and otherwise
    the class of the previous segment. When the table was produced by the
    segment-end recursion, ``starts[k, t, c]`` holds the first frame of the
    segment ending at ``t``.
    """

    STAY = -1
    START = -2

    values: np.ndarray
    prev_class: np.ndarray
    starts: np.ndarray | None = None

    def __post_init__(self):
        # tables can be large; take ownership instead of copying
        for arr in (self.values, self.prev_class, self.starts):
            if arr is not None:
                arr.setflags(write=False)

    def boundary(self, k: int, t: int, c: int) -> bool:
        """True if a segment starts at frame ``t`` on the best path into ``(k, t, c)``."""
        if self.starts is not None:
            return bool(self.starts[k, t, c] == t)
        return bool(self.prev_class[k, t, c] != self.STAY)


def labels_to_segments(y) -> Segmentation:
    """Run-length encode a label sequence into a strict segmentation."""
    y = check_labels(y)
    if y.size == 0:
        raise SegmentationError("empty label sequence")
    change = np.flatnonzero(np.diff(y)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [y.size]))
    return Segmentation(
        tuple(Segment(int(y[s]), int(s), int(e - s)) for s, e in zip(starts, ends)),
        int(y.size),
    )


def segments_to_labels(seg: Segmentation) -> np.ndarray:
    return np.repeat(
        np.array(seg.labels, dtype=np.int64), np.array(seg.durations, dtype=np.int64)
    )
