"""Synthetic data: random benchmark sequences and the two-sine-wave toy problem."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Segmentation, TransitionModel, labels_to_segments, segments_to_labels
from ..metrics import frame_accuracy
from ..segmental import (
    DurationFeature,
    NO_DURATION,
    Scoring,
    estimate_transitions,
    segmental_viterbi,
)


def generate_benchmark(
    T: int, C: int, K_true: int, score_snr: float, seed: int = 0
) -> tuple[np.ndarray, Segmentation, TransitionModel]:
    """Random strict ground truth with ``K_true`` segments and noisy one-hot scores.

    Breakpoints are drawn uniformly without replacement; each segment takes a
    class different from its predecessor. Scores are ``snr * onehot + N(0, 1)``
    and the transition model is estimated from the ground truth itself.
    """
    if not 1 <= K_true <= T:
        raise ValueError(f"need 1 <= K_true <= T, got K_true={K_true}, T={T}")
    if C < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    cuts = np.sort(rng.choice(np.arange(1, T), size=K_true - 1, replace=False))
    starts = np.concatenate(([0], cuts)).astype(int)
    labels = [int(rng.integers(C))]
    for _ in range(K_true - 1):
        nxt = int(rng.integers(C - 1))
        labels.append(nxt + (nxt >= labels[-1]))
    gt = Segmentation.from_boundaries(labels, list(starts), T)
    y = segments_to_labels(gt)
    S = rng.standard_normal((T, C))
    S[np.arange(T), y] += score_snr
    return S, gt, estimate_transitions([gt], C)


@dataclass(frozen=True)
class ToyConfig:
    """Two classes of sine-wave actions; class 1 is phase shifted and offset."""

    segment_length: int = 50
    phase_shift: float = np.pi / 2
    offset: float = 1.0
    cycles_per_segment: float = 1.0
    noise_sd: float = 0.05
    num_train_instances: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.segment_length < 2:
            raise ValueError("segment_length must be at least 2")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if self.num_train_instances < 1:
            raise ValueError("num_train_instances must be positive")


def _toy_instance(cfg: ToyConfig, cls: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(cfg.segment_length)
    phase = 2 * np.pi * cfg.cycles_per_segment * t / cfg.segment_length
    x = np.sin(phase + cfg.phase_shift) + cfg.offset if cls else np.sin(phase)
    x = x + cfg.noise_sd * rng.standard_normal(cfg.segment_length)
    return x[:, None]


def generate_toy(cfg: ToyConfig = ToyConfig()):
    """Training instances of both classes plus a test sequence of two class-1 instances.

    Returns ``(train, test)``; every item is a ``(features, labels)`` pair with
    features of shape ``(T, 1)``. Training instances alternate class 0 and 1.
    """
    rng = np.random.default_rng(cfg.seed)
    L = cfg.segment_length
    train = []
    for i in range(cfg.num_train_instances):
        c = i % 2
        train.append((_toy_instance(cfg, c, rng), np.full(L, c, dtype=np.int64)))
    test_x = np.concatenate([_toy_instance(cfg, 1, rng) for _ in range(2)])
    return train, (test_x, np.ones(2 * L, dtype=np.int64))


def fit_class_means(train) -> np.ndarray:
    """Per-class linear score weights ``(slope, bias)`` from class feature means.

    Frame score for class ``c`` is ``mu_c * x - mu_c**2 / 2``: the nearest-mean
    rule under equal isotropic variance.
    """
    X = np.concatenate([x[:, 0] for x, _ in train])
    y = np.concatenate([lab for _, lab in train])
    mu = np.array([X[y == c].mean() for c in range(int(y.max()) + 1)])
    return np.stack([mu, -0.5 * mu**2], axis=1)


def toy_scores(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x[:, :1] * weights[:, 0] + weights[:, 1]


def _toy_model(num_classes: int) -> TransitionModel:
    # only the mean data term and the duration term score a segment
    return TransitionModel.zeros(num_classes)


def _decode(S: np.ndarray, duration: DurationFeature) -> Segmentation:
    seg, _ = segmental_viterbi(
        S,
        _toy_model(S.shape[1]),
        S.shape[0],
        Scoring.MEAN_PLUS_PRIOR,
        duration,
        strict=False,
    )
    return seg


def fit_duration_weight(
    scored_train: list[tuple[np.ndarray, Segmentation]],
    margin: float = 2.0,
    tol: float = 1e-3,
) -> DurationFeature:
    """Smallest squared-duration weight that decodes every training sequence exactly.

    Over full segmentations the durations always sum to ``T``, so a linear
    duration weight shifts every candidate equally; only the squared term
    changes the argmax. Mean-scored segments reward splitting, so the weight
    must be positive. The smallest sufficient weight is bracketed by doubling
    and refined by bisection (to relative tolerance ``tol``), then scaled by
    ``margin``.
    """

    def ok(w2: float) -> bool:
        dur = DurationFeature.quadratic(0.0, w2)
        return all(_decode(S, dur) == gt for S, gt in scored_train)

    if ok(0.0):
        return DurationFeature.quadratic(0.0, 0.0)
    hi = 1e-8
    while not ok(hi):
        hi *= 2.0
        if hi > 1e8:
            raise RuntimeError("no duration weight reproduces the training segmentations")
    lo = hi / 2.0 if hi > 1e-8 else 0.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return DurationFeature.quadratic(0.0, margin * hi)


@dataclass(frozen=True)
class ToyReport:
    acc_without_duration: float
    acc_with_duration: float
    duration: DurationFeature
    scores: np.ndarray = field(repr=False)
    pred_without: np.ndarray = field(repr=False)
    pred_with: np.ndarray = field(repr=False)
    seglen_without: np.ndarray = field(repr=False)
    seglen_with: np.ndarray = field(repr=False)

    def plot_rows(self):
        """Per-frame rows: frame, score margin (class 1 minus class 0), predictions, segment lengths."""
        margin = self.scores[:, 1] - self.scores[:, 0]
        for t in range(margin.size):
            yield (
                t,
                float(margin[t]),
                int(self.pred_without[t]),
                int(self.pred_with[t]),
                int(self.seglen_without[t]),
                int(self.seglen_with[t]),
            )


def _seglen_per_frame(seg: Segmentation) -> np.ndarray:
    return np.repeat(np.array(seg.durations), seg.durations)


def run_toy_experiment(cfg: ToyConfig = ToyConfig()) -> ToyReport:
    """Decode the toy test sequence with and without a fitted duration term."""
    train, (test_x, test_y) = generate_toy(cfg)
    w = fit_class_means(train)
    scored = [(toy_scores(w, x), labels_to_segments(y)) for x, y in train]
    dur = fit_duration_weight(scored)
    S = toy_scores(w, test_x)
    without = _decode(S, NO_DURATION)
    with_dur = _decode(S, dur)
    y0, y1 = segments_to_labels(without), segments_to_labels(with_dur)
    return ToyReport(
        acc_without_duration=frame_accuracy(test_y, y0),
        acc_with_duration=frame_accuracy(test_y, y1),
        duration=dur,
        scores=S,
        pred_without=y0,
        pred_with=y1,
        seglen_without=_seglen_per_frame(without),
        seglen_with=_seglen_per_frame(with_dur),
    )


__all__ = [
    "generate_benchmark",
    "ToyConfig",
    "ToyReport",
    "generate_toy",
    "fit_class_means",
    "toy_scores",
    "fit_duration_weight",
    "run_toy_experiment",
]
