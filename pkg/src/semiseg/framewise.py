"""Frame-wise linear model with skip-frame pairwise potentials.

The energy of a labeling is a sum of weighted potentials::

    E(X, y) = sum_i <w_i, phi_i(X, y)>

Exact decoding is supported when every pairwise term uses the same skip
``d``: frames ``r, r+d, r+2d, ...`` then form ``d`` independent chains, each
solved by Viterbi in O(T C^2) total.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import check_labels
from .losses import Loss, loss_table, loss_value


class Potential(enum.Enum):
    DATA = "data"
    PAIR_CLASS = "pair_class"
    PAIR_DATA = "pair_data"
    CLASS_PRIOR = "class_prior"
    BOUNDARY_START = "boundary_start"
    BOUNDARY_END = "boundary_end"
    TEMPORAL_PRIOR = "temporal_prior"


PAIRWISE = frozenset({Potential.PAIR_CLASS, Potential.PAIR_DATA})


class UnsupportedConfigError(ValueError):
    """The potential configuration has no exact decoder."""


@dataclass(frozen=True)
class PotentialConfig:
    """Which potentials are active and their hyperparameters.

    ``boundary_window`` defaults to ``skip`` and ``pair_data_skip`` to
    ``skip``; ``canonical_length`` is the number of temporal-prior bins.
    """

    enabled: frozenset[Potential] = frozenset({Potential.DATA})
    skip: int = 1
    canonical_length: int = 50
    feature_dim: int = 1
    boundary_window: int | None = None
    pair_data_skip: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "enabled", frozenset(Potential(p) for p in self.enabled))
        if self.skip < 1:
            raise ValueError("skip must be >= 1")
        if self.canonical_length < 1:
            raise ValueError("canonical_length must be >= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if self.boundary_window is not None and self.boundary_window < 1:
            raise ValueError("boundary_window must be >= 1")
        if self.pair_data_skip is not None and self.pair_data_skip < 1:
            raise ValueError("pair_data_skip must be >= 1")

    @property
    def window(self) -> int:
        return self.skip if self.boundary_window is None else self.boundary_window

    def skip_for(self, p: Potential) -> int:
        if p is Potential.PAIR_DATA and self.pair_data_skip is not None:
            return self.pair_data_skip
        return self.skip

    def shapes(self, num_classes: int) -> dict[Potential, tuple[int, ...]]:
        C, F, Tc = num_classes, self.feature_dim, self.canonical_length
        all_shapes = {
            Potential.DATA: (C, F),
            Potential.PAIR_CLASS: (C, C),
            Potential.PAIR_DATA: (C, C, F),
            Potential.CLASS_PRIOR: (C,),
            Potential.BOUNDARY_START: (C,),
            Potential.BOUNDARY_END: (C,),
            Potential.TEMPORAL_PRIOR: (Tc, C),
        }
        return {p: s for p, s in all_shapes.items() if p in self.enabled}


@dataclass
class WeightSet:
    """One array per enabled potential. Also used for joint feature maps."""

    arrays: dict[Potential, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros(cls, cfg: PotentialConfig, num_classes: int) -> "WeightSet":
        return cls({p: np.zeros(s) for p, s in cfg.shapes(num_classes).items()})

    @classmethod
    def random(cls, cfg: PotentialConfig, num_classes: int, rng, scale=1.0) -> "WeightSet":
        return cls({p: scale * rng.standard_normal(s) for p, s in cfg.shapes(num_classes).items()})

    def __getitem__(self, p: Potential) -> np.ndarray:
        return self.arrays[p]

    def __contains__(self, p) -> bool:
        return p in self.arrays

    def __iter__(self) -> Iterator[Potential]:
        return iter(self.arrays)

    def items(self):
        return self.arrays.items()

    @property
    def num_classes(self) -> int:
        for p, a in self.arrays.items():
            return a.shape[1] if p is Potential.TEMPORAL_PRIOR else a.shape[0]
        raise ValueError("empty weight set")

    def _check_same(self, other: "WeightSet"):
        if self.arrays.keys() != other.arrays.keys():
            raise ValueError("weight sets cover different potentials")
        for p in self.arrays:
            if self.arrays[p].shape != other.arrays[p].shape:
                raise ValueError(f"shape mismatch for {p.name}")

    def map(self, fn) -> "WeightSet":
        return WeightSet({p: fn(a) for p, a in self.arrays.items()})

    def zip_map(self, other: "WeightSet", fn) -> "WeightSet":
        self._check_same(other)
        return WeightSet({p: fn(a, other.arrays[p]) for p, a in self.arrays.items()})

    def __add__(self, other: "WeightSet") -> "WeightSet":
        return self.zip_map(other, np.add)

    def __sub__(self, other: "WeightSet") -> "WeightSet":
        return self.zip_map(other, np.subtract)

    def __mul__(self, scalar: float) -> "WeightSet":
        return self.map(lambda a: a * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "WeightSet":
        return self.map(np.negative)

    def dot(self, other: "WeightSet") -> float:
        self._check_same(other)
        return float(sum(np.vdot(a, other.arrays[p]) for p, a in self.arrays.items()))

    def copy(self) -> "WeightSet":
        return self.map(np.array)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays.values()]) if self.arrays else np.zeros(0)

    def allclose(self, other: "WeightSet", **kw) -> bool:
        self._check_same(other)
        return all(np.allclose(a, other.arrays[p], **kw) for p, a in self.arrays.items())


def _check_inputs(X, cfg: PotentialConfig) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != cfg.feature_dim:
        raise ValueError(f"features must be T x {cfg.feature_dim}, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    T = X.shape[0]
    for p in cfg.enabled & PAIRWISE:
        if T <= cfg.skip_for(p):
            raise ValueError(f"{p.name} needs more than {cfg.skip_for(p)} frames, got {T}")
    return X


def canonical_bins(T: int, canonical_length: int) -> np.ndarray:
    """Temporal-prior bin of each frame: floor(t * T' / T), clipped to [0, T'-1]."""
    t = np.arange(T)
    return np.minimum(t * canonical_length // T, canonical_length - 1)


def joint_features(X, y, cfg: PotentialConfig, num_classes: int) -> WeightSet:
    """Sufficient statistics of every enabled potential for labeling ``y``."""
    X = _check_inputs(X, cfg)
    y = check_labels(y, num_classes)
    T, C = X.shape[0], num_classes
    if y.size != T:
        raise ValueError(f"{y.size} labels for {T} frames")
    onehot = np.zeros((T, C))
    onehot[np.arange(T), y] = 1.0
    out = {}
    for p, shape in cfg.shapes(C).items():
        if p is Potential.DATA:
            out[p] = onehot.T @ X
        elif p is Potential.PAIR_CLASS:
            d = cfg.skip_for(p)
            out[p] = onehot[:-d].T @ onehot[d:]
        elif p is Potential.PAIR_DATA:
            d = cfg.skip_for(p)
            diff = X[d:] - X[:-d]
            phi = np.zeros(shape)
            np.add.at(phi, (y[:-d], y[d:]), diff)
            out[p] = phi
        elif p is Potential.CLASS_PRIOR:
            out[p] = onehot.sum(axis=0)
        elif p is Potential.BOUNDARY_START:
            out[p] = onehot[: cfg.window].sum(axis=0)
        elif p is Potential.BOUNDARY_END:
            out[p] = onehot[max(T - cfg.window, 0) :].sum(axis=0)
        elif p is Potential.TEMPORAL_PRIOR:
            phi = np.zeros(shape)
            np.add.at(phi, (canonical_bins(T, cfg.canonical_length), y), 1.0)
            out[p] = phi
    return WeightSet(out)


def _check_weights(w: WeightSet, cfg: PotentialConfig) -> int:
    C = w.num_classes
    expected = cfg.shapes(C)
    if set(w.arrays) != set(expected):
        raise ValueError("weights do not match the enabled potentials")
    for p, s in expected.items():
        if w[p].shape != s:
            raise ValueError(f"{p.name} weights have shape {w[p].shape}, expected {s}")
        if not np.all(np.isfinite(w[p])):
            raise ValueError(f"{p.name} weights are not finite")
    return C


def framewise_energy(w: WeightSet, X, y, cfg: PotentialConfig) -> float:
    """Energy summed frame by frame (independent of :func:`joint_features`)."""
    C = _check_weights(w, cfg)
    X = _check_inputs(X, cfg)
    y = check_labels(y, C)
    T = X.shape[0]
    if y.size != T:
        raise ValueError(f"{y.size} labels for {T} frames")
    bins = canonical_bins(T, cfg.canonical_length)
    total = 0.0
    for t in range(T):
        c = y[t]
        if Potential.DATA in w:
            total += float(w[Potential.DATA][c] @ X[t])
        if Potential.CLASS_PRIOR in w:
            total += w[Potential.CLASS_PRIOR][c]
        if Potential.BOUNDARY_START in w and t < cfg.window:
            total += w[Potential.BOUNDARY_START][c]
        if Potential.BOUNDARY_END in w and t >= T - cfg.window:
            total += w[Potential.BOUNDARY_END][c]
        if Potential.TEMPORAL_PRIOR in w:
            total += w[Potential.TEMPORAL_PRIOR][bins[t], c]
        if Potential.PAIR_CLASS in w:
            d = cfg.skip_for(Potential.PAIR_CLASS)
            if t >= d:
                total += w[Potential.PAIR_CLASS][y[t - d], c]
        if Potential.PAIR_DATA in w:
            d = cfg.skip_for(Potential.PAIR_DATA)
            if t >= d:
                total += float(w[Potential.PAIR_DATA][y[t - d], c] @ (X[t] - X[t - d]))
    return float(total)


def unary_scores(w: WeightSet, X: np.ndarray, cfg: PotentialConfig) -> np.ndarray:
    """T x C score of each label at each frame from the non-pairwise potentials."""
    T, C = X.shape[0], w.num_classes
    U = np.zeros((T, C))
    if Potential.DATA in w:
        U += X @ w[Potential.DATA].T
    if Potential.CLASS_PRIOR in w:
        U += w[Potential.CLASS_PRIOR]
    if Potential.BOUNDARY_START in w:
        U[: cfg.window] += w[Potential.BOUNDARY_START]
    if Potential.BOUNDARY_END in w:
        U[max(T - cfg.window, 0) :] += w[Potential.BOUNDARY_END]
    if Potential.TEMPORAL_PRIOR in w:
        U += w[Potential.TEMPORAL_PRIOR][canonical_bins(T, cfg.canonical_length)]
    return U


def framewise_decode(
    w: WeightSet,
    X,
    cfg: PotentialConfig,
    loss_augment: tuple[np.ndarray, Loss] | None = None,
) -> np.ndarray:
    """Highest-energy labeling, optionally of ``energy + loss(y_star, .)``."""
    C = _check_weights(w, cfg)
    X = _check_inputs(X, cfg)
    T = X.shape[0]
    pair = sorted(cfg.enabled & PAIRWISE, key=lambda p: p.value)
    skips = {cfg.skip_for(p) for p in pair}
    if len(skips) > 1:
        raise UnsupportedConfigError(f"pairwise potentials use different skips {sorted(skips)}")

    U = unary_scores(w, X, cfg)
    if loss_augment is not None:
        y_star, kind = loss_augment
        y_star = check_labels(y_star, C)
        if y_star.size != T:
            raise ValueError(f"{y_star.size} labels for {T} frames")
        U = U + loss_table(y_star, kind, C)
    if not pair:
        return np.argmax(U, axis=1).astype(np.int64)

    d = skips.pop()
    V = U.copy()
    back = np.zeros((T, C), dtype=np.int64)
    W_pc = w[Potential.PAIR_CLASS] if Potential.PAIR_CLASS in w else np.zeros((C, C))
    for t in range(d, T):
        P = W_pc
        if Potential.PAIR_DATA in w:
            P = P + w[Potential.PAIR_DATA] @ (X[t] - X[t - d])
        scores = V[t - d][:, None] + P  # [prev, cur]
        back[t] = np.argmax(scores, axis=0)
        V[t] = scores[back[t], np.arange(C)] + U[t]
    y = np.empty(T, dtype=np.int64)
    for r in range(min(d, T)):
        last = r + ((T - 1 - r) // d) * d
        y[last] = int(np.argmax(V[last]))
        for t in range(last, r, -d):
            y[t - d] = back[t, y[t]]
    return y


def brute_force_framewise(w: WeightSet, X, cfg: PotentialConfig, loss_augment=None):
    """Exhaustive argmax over all C**T labelings (reference for small T)."""
    C = w.num_classes
    X = _check_inputs(X, cfg)
    T = X.shape[0]
    if C**T > 200_000:
        raise ValueError("too many labelings for exhaustive search")
    best, best_y = -np.inf, None
    for labs in itertools.product(range(C), repeat=T):
        y = np.array(labs)
        e = framewise_energy(w, X, y, cfg)
        if loss_augment is not None:
            e += loss_value(loss_augment[1], loss_augment[0], y)
        if e > best:
            best, best_y = e, y
    return best_y, best
