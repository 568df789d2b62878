"""Semi-Markov segment scoring and decoding.

Two exact max-product decoders are provided:

* :func:`segmental_viterbi` bounds every segment duration by ``D`` and costs
  O(T D C^2).
* :func:`constrained_decode` bounds the number of segments by ``K`` instead
  and costs O(K T C^2) when the segment score is a sum of per-frame terms.

:func:`brute_force_decode` enumerates every strict segmentation and serves as
the reference for both.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import _kernels
from .core import (
    FORBIDDEN,
    InfeasibleError,
    ScoreTable,
    Segment,
    Segmentation,
    SegmentationError,
    TransitionModel,
    check_scores,
    segments_to_labels,
)

BRUTE_FORCE_MAX_FRAMES = 14


class Scoring(enum.Enum):
    """How frame scores inside a segment are pooled.

    SUM: ``A[prev, c] + sum(s[t, c])``.
    MEAN_PLUS_PRIOR: ``log_prior[c] + A[prev, c] + mean(s[t, c])``.
    """

    SUM = "sum"
    MEAN_PLUS_PRIOR = "mean-prior"


class DurationKind(enum.Enum):
    NONE = "none"
    DISCRETE = "discrete"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class DurationFeature:
    """Per-segment duration potential ``weights . gamma(d)``.

    ``gamma(d)`` is ``[d]`` for DISCRETE and ``[d, d**2]`` for QUADRATIC.
    """

    kind: DurationKind = DurationKind.NONE
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        expected = {DurationKind.NONE: 0, DurationKind.DISCRETE: 1, DurationKind.QUADRATIC: 2}
        if len(w) != expected[self.kind]:
            raise ValueError(
                f"{self.kind.name} duration feature needs {expected[self.kind]} weights, got {len(w)}"
            )
        if not all(np.isfinite(w)):
            raise ValueError("duration weights must be finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def quadratic(cls, linear: float, square: float) -> "DurationFeature":
        return cls(DurationKind.QUADRATIC, (linear, square))

    def features(self, d: int) -> np.ndarray:
        if self.kind is DurationKind.NONE:
            return np.zeros(0)
        if self.kind is DurationKind.DISCRETE:
            return np.array([d], dtype=float)
        return np.array([d, d * d], dtype=float)

    def score(self, d: int) -> float:
        if self.kind is DurationKind.NONE:
            return 0.0
        return float(np.dot(self.weights, self.features(d)))

    @property
    def coefficients(self) -> tuple[float, float]:
        """(linear, square) coefficients for the compiled kernels."""
        w = self.weights + (0.0,) * (2 - len(self.weights))
        return w[0], w[1]


NO_DURATION = DurationFeature()


def _check_model(S: np.ndarray, model: TransitionModel):
    if model.num_classes != S.shape[1]:
        raise ValueError(
            f"transition model has {model.num_classes} classes, scores have {S.shape[1]}"
        )


def _prior(model: TransitionModel, variant: Scoring) -> np.ndarray:
    if variant is Scoring.MEAN_PLUS_PRIOR:
        return np.ascontiguousarray(model.log_prior, dtype=float)
    return np.zeros(model.num_classes)


def segment_score(
    S: np.ndarray,
    model: TransitionModel,
    prev: int | None,
    label: int,
    start: int,
    duration: int,
    variant: Scoring = Scoring.SUM,
    duration_feature: DurationFeature = NO_DURATION,
) -> float:
    """Score of one segment; ``prev`` is None for the first segment."""
    frames = S[start : start + duration, label]
    if variant is Scoring.SUM:
        f = float(frames.sum())
    else:
        f = float(model.log_prior[label]) + float(frames.sum()) / duration
    if prev is not None:
        f += float(model.log_transition[prev, label])
    return f + duration_feature.score(duration)


def segment_energy(
    S,
    P: Segmentation,
    model: TransitionModel,
    variant: Scoring = Scoring.SUM,
    duration: DurationFeature = NO_DURATION,
    strict: bool = True,
) -> float:
    """Total score of segmentation ``P``; ``-inf`` if it uses a forbidden transition.

    With ``strict=False`` adjacent segments may share a label and are charged
    the diagonal entry of the transition matrix.
    """
    S = check_scores(S)
    _check_model(S, model)
    if P.total_frames != S.shape[0]:
        raise ValueError(f"segmentation covers {P.total_frames} frames, scores have {S.shape[0]}")
    if strict and not P.is_strict():
        raise SegmentationError("adjacent segments share a label")
    if max(P.labels) >= S.shape[1]:
        raise SegmentationError("segment label out of range")
    total = 0.0
    prev = None
    for seg in P:
        total += segment_score(S, model, prev, seg.label, seg.start, seg.duration, variant, duration)
        prev = seg.label
    return total


def estimate_transitions(
    train: Iterable[Segmentation], num_classes: int, epsilon: float = 1e-2
) -> TransitionModel:
    """Additively smoothed log transition probabilities and log class priors.

    Self-transitions are forbidden. With ``epsilon == 0`` unobserved
    transitions become forbidden too.
    """
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    counts = np.zeros((num_classes, num_classes))
    seg_counts = np.zeros(num_classes)
    for P in train:
        if not P.is_strict():
            raise SegmentationError("training segmentations must be strict")
        labs = P.labels
        if max(labs) >= num_classes:
            raise SegmentationError(f"label {max(labs)} out of range")
        np.add.at(seg_counts, labs, 1)
        for a, b in zip(labs, labs[1:]):
            counts[a, b] += 1
    smoothed = counts + epsilon
    np.fill_diagonal(smoothed, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rows = smoothed.sum(axis=1, keepdims=True)
        probs = np.where(rows > 0, smoothed / np.where(rows > 0, rows, 1.0), 0.0)
        A = np.log(probs)
        prior_counts = seg_counts + epsilon
        total = prior_counts.sum()
        prior = np.log(prior_counts / total) if total > 0 else np.full(num_classes, FORBIDDEN)
    np.fill_diagonal(A, FORBIDDEN)
    return TransitionModel(A, prior)


def max_segment_count(train: Iterable[Segmentation]) -> int:
    """Default K: the largest number of segments seen in training."""
    return max(len(P) for P in train)


def max_segment_duration(train: Iterable[Segmentation]) -> int:
    return max(max(P.durations) for P in train)


def theoretical_speedup(D: float, K: float) -> float:
    """Ratio of the O(TDC^2) and O(KTC^2) operation counts."""
    if K < 1:
        raise ValueError("K must be at least 1")
    return D / K


def _is_decomposable(variant: Scoring, duration: DurationFeature) -> bool:
    if variant is not Scoring.SUM:
        return False
    return duration.kind is not DurationKind.QUADRATIC or duration.weights[1] == 0.0


def _masked_transposed(model: TransitionModel, strict: bool = True) -> np.ndarray:
    """``AT[c, c_prev]``, with self-transitions forbidden when ``strict``."""
    AT = np.array(model.log_transition.T, dtype=float, order="C")
    if strict:
        np.fill_diagonal(AT, FORBIDDEN)
    return AT


def segmental_viterbi(
    S,
    model: TransitionModel,
    max_duration: int,
    variant: Scoring = Scoring.SUM,
    duration: DurationFeature = NO_DURATION,
    strict: bool = True,
) -> tuple[Segmentation, float]:
    """Best strict segmentation with every segment at most ``max_duration`` frames.

    ``strict=False`` lets consecutive segments share a label (scored with
    the diagonal of the transition matrix), which only makes sense when
    segment scores are not additive over frames.
    """
    S = check_scores(S)
    _check_model(S, model)
    T = S.shape[0]
    if not 1 <= max_duration <= T:
        raise ValueError(f"max_duration must be in [1, {T}], got {max_duration}")
    w1, w2 = duration.coefficients
    V, best_dur, best_prev = _kernels.segviterbi_forward(
        np.ascontiguousarray(S),
        _masked_transposed(model, strict),
        _prior(model, variant),
        int(max_duration),
        variant is Scoring.MEAN_PLUS_PRIOR,
        w1,
        w2,
    )
    c = int(np.argmax(V[T]))
    energy = float(V[T, c])
    if energy == FORBIDDEN:
        raise InfeasibleError(f"no segmentation with durations <= {max_duration} is feasible")
    labels, starts = _kernels.segviterbi_backtrack(best_dur, best_prev, c)
    return Segmentation.from_boundaries(labels.tolist(), starts.tolist(), T), energy


def constrained_decode(
    S,
    model: TransitionModel,
    max_segments: int,
    variant: Scoring = Scoring.SUM,
    duration: DurationFeature = NO_DURATION,
) -> tuple[Segmentation, float, ScoreTable]:
    """Best strict segmentation with at most ``max_segments`` segments.

    For summed scores (optionally with a DISCRETE duration term, which adds a
    constant per frame) this is the O(KTC^2) stay-or-switch recursion. Mean
    scores and quadratic durations do not decompose over frames, so those
    cases use an exact recursion over segment end points instead,
    O(KT^2C + KTC^2).
    """
    S = check_scores(S)
    _check_model(S, model)
    T, C = S.shape
    K = int(max_segments)
    if not 1 <= K <= T:
        raise ValueError(f"max_segments must be in [1, {T}], got {max_segments}")
    AT = _masked_transposed(model)
    w1, w2 = duration.coefficients

    if _is_decomposable(variant, duration):
        V, bp = _kernels.constrained_forward(np.ascontiguousarray(S + w1), AT, K)
        table = ScoreTable(V, bp)
    else:
        V, bp, st = _kernels.constrained_segment_end_forward(
            np.ascontiguousarray(S), AT, _prior(model, variant), K,
            variant is Scoring.MEAN_PLUS_PRIOR, w1, w2,
        )
        table = ScoreTable(V, bp, st)
    # row-major argmax: fewest segments, then lowest class, on ties
    k, c = divmod(int(np.argmax(V[:, T - 1, :])), C)
    energy = float(V[k, T - 1, c])
    if energy == FORBIDDEN:
        raise InfeasibleError(f"no segmentation with <= {K} segments is feasible")
    if table.starts is None:
        labels, starts = _kernels.constrained_backtrack(bp, k, c)
    else:
        labels, starts = _kernels.segment_end_backtrack(bp, table.starts, k, c)
    seg = Segmentation.from_boundaries(labels.tolist(), starts.tolist(), T)
    return seg, energy, table


@lru_cache(maxsize=None)
def _label_tuples(num_segments: int, num_classes: int, strict: bool) -> np.ndarray:
    rows = [
        labs
        for labs in itertools.product(range(num_classes), repeat=num_segments)
        if not strict or all(a != b for a, b in zip(labs, labs[1:]))
    ]
    out = np.array(rows, dtype=np.int64).reshape(len(rows), num_segments)
    out.setflags(write=False)
    return out


def brute_force_decode(
    S,
    model: TransitionModel,
    *,
    max_duration: int | None = None,
    max_segments: int | None = None,
    variant: Scoring = Scoring.SUM,
    duration: DurationFeature = NO_DURATION,
    strict: bool = True,
) -> tuple[Segmentation, float]:
    """Exhaustive search over strict segmentations; a reference for small inputs.

    Exactly one of ``max_duration`` / ``max_segments`` must be given. Ties go
    to the fewest segments, then to the lexicographically smallest frame
    labeling.
    """
    S = check_scores(S)
    _check_model(S, model)
    T, C = S.shape
    if T > BRUTE_FORCE_MAX_FRAMES:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_FRAMES} frames, got {T}")
    if (max_duration is None) == (max_segments is None):
        raise ValueError("give exactly one of max_duration or max_segments")
    D = T if max_duration is None else int(max_duration)
    K = T if max_segments is None else int(max_segments)
    A = model.log_transition
    prior = model.log_prior
    mean = variant is Scoring.MEAN_PLUS_PRIOR

    best_e = FORBIDDEN
    best = None  # (num_segments, frame labels, bounds, labels)
    for M in range(1, min(K, T) + 1):
        labs = _label_tuples(M, C, strict)
        trans = A[labs[:, :-1], labs[:, 1:]].sum(axis=1) if M > 1 else np.zeros(len(labs))
        for cuts in itertools.combinations(range(1, T), M - 1):
            bounds = (0,) + cuts + (T,)
            durs = np.diff(bounds)
            if durs.max() > D:
                continue
            G = np.empty((M, C))
            for j in range(M):
                seg = S[bounds[j] : bounds[j + 1]].sum(axis=0)
                if mean:
                    seg = prior + seg / durs[j]
                G[j] = seg + duration.score(int(durs[j]))
            energies = G[np.arange(M), labs].sum(axis=1) + trans
            e = energies.max()
            if e == FORBIDDEN or e < best_e:
                continue
            tied = labs[energies == e]
            frames = min(tuple(np.repeat(row, durs)) for row in tied)
            if best is None or e > best_e or (M == best[0] and frames < best[1]):
                best_e = float(e)
                best = (M, frames, bounds)
    if best is None:
        raise InfeasibleError("no feasible segmentation")
    M, frames, bounds = best
    seg = Segmentation.from_boundaries(
        [int(frames[b]) for b in bounds[:-1]], list(bounds[:-1]), T
    )
    return seg, best_e


def frame_energy(S, y, model: TransitionModel) -> float:
    """SUM-variant energy of a frame labeling, computed frame by frame.

    Independent of the segment machinery; used to cross-check it.
    """
    S = check_scores(S)
    y = np.asarray(y)
    total = float(S[np.arange(len(y)), y].sum())
    for t in range(1, len(y)):
        if y[t] == y[t - 1]:
            continue
        total += float(model.log_transition[y[t - 1], y[t]])
    return total


__all__ = [
    "Scoring",
    "DurationKind",
    "DurationFeature",
    "NO_DURATION",
    "segment_score",
    "segment_energy",
    "estimate_transitions",
    "max_segment_count",
    "max_segment_duration",
    "theoretical_speedup",
    "segmental_viterbi",
    "constrained_decode",
    "brute_force_decode",
    "frame_energy",
    "segments_to_labels",
]
