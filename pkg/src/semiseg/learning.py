"""Structural SVM training of frame-wise models, plus a small recurrent baseline.

The SSVM objective with loss-augmented hinge is minimized by stochastic
subgradient descent with per-coordinate Adagrad step sizes. With the
regularizer ``R`` the objective for a batch of N samples is::

    J(w) = R(w) + C/N * sum_n [ max_y D(y*_n, y) + <w, Psi(X_n, y) - Psi(X_n, y*_n)> ]

``R`` is ``0.5 * ||w||^2`` for L2 so that its gradient is ``w``, the sum of
absolute values for L1, and the sum of per-matrix nuclear norms for
NUCLEAR.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import check_labels
from .framewise import PotentialConfig, WeightSet, framewise_decode, joint_features
from .losses import Loss, hamming_loss, loss_value, overlap_loss

log = logging.getLogger(__name__)

Sample = tuple[np.ndarray, np.ndarray]


class Regularizer(enum.Enum):
    NONE = "none"
    L2 = "l2"
    L1 = "l1"
    NUCLEAR = "nuclear"


@dataclass(frozen=True)
class TrainConfig:
    C_reg: float = 1.0
    eta: float = 1.0
    epochs: int = 50
    regularizer: Regularizer = Regularizer.L2
    loss: Loss = Loss.HAMMING
    adagrad_epsilon: float = 1e-8
    seed: int = 0
    batch_size: int = 1

    def __post_init__(self):
        if self.C_reg <= 0 or self.eta <= 0:
            raise ValueError("C_reg and eta must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.adagrad_epsilon < 0:
            raise ValueError("adagrad_epsilon must be non-negative")


# -- singular value decomposition --------------------------------------------


def jacobi_svd(M, tol: float = 1e-15, max_sweeps: int = 100):
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Returns ``U, s, Vt`` with ``M = U @ diag(s) @ Vt`` and ``s`` sorted in
    decreasing order.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("jacobi_svd expects a matrix")
    transposed = M.shape[0] < M.shape[1]
    A = (M.T if transposed else M).copy()
    n = A.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = A[:, p] @ A[:, p]
                beta = A[:, q] @ A[:, q]
                gamma = A[:, p] @ A[:, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                ap, aq = A[:, p].copy(), A[:, q]
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if not rotated:
            break
    sv = np.linalg.norm(A, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv, A, V = sv[order], A[:, order], V[:, order]
    U = np.zeros_like(A)
    nz = sv > 0
    U[:, nz] = A[:, nz] / sv[nz]
    if transposed:
        return V, sv, U.T
    return U, sv, V.T


def _as_matrix(a: np.ndarray) -> np.ndarray:
    return a.reshape(1, -1) if a.ndim == 1 else a.reshape(a.shape[0], -1)


def _nuclear_grad(a: np.ndarray, cutoff: float = 1e-10) -> np.ndarray:
    U, s, Vt = jacobi_svd(_as_matrix(a))
    keep = s > cutoff
    return (U[:, keep] @ Vt[keep]).reshape(a.shape)


def reg_value(w: WeightSet, kind: Regularizer) -> float:
    if kind is Regularizer.NONE:
        return 0.0
    if kind is Regularizer.L2:
        return 0.5 * float(w.dot(w))
    if kind is Regularizer.L1:
        return float(sum(np.abs(a).sum() for _, a in w.items()))
    return float(sum(jacobi_svd(_as_matrix(a))[1].sum() for _, a in w.items()))


def reg_grad(w: WeightSet, kind: Regularizer) -> WeightSet:
    """Gradient of the regularizer; at zero entries L1 uses sign(0) = 0."""
    if kind is Regularizer.NONE:
        return w.map(np.zeros_like)
    if kind is Regularizer.L2:
        return w.copy()
    if kind is Regularizer.L1:
        return w.map(np.sign)
    return w.map(_nuclear_grad)


# -- SSVM ------------------------------------------------------------------


def loss_augmented_decode(w: WeightSet, X, y_star, cfg: PotentialConfig, loss: Loss) -> np.ndarray:
    return framewise_decode(w, X, cfg, loss_augment=(check_labels(y_star), loss))


def hinge_terms(
    w: WeightSet, batch: Sequence[Sample], cfg: PotentialConfig, loss: Loss, y_hats=None
) -> tuple[float, WeightSet, list[np.ndarray]]:
    """Sum of per-sample hinges and of ``Psi(y_hat) - Psi(y*)``.

    ``y_hats`` fixes the maximizers; otherwise they are found by
    loss-augmented decoding.
    """
    C = w.num_classes
    total = 0.0
    diff = w.map(np.zeros_like)
    chosen = []
    for i, (X, y_star) in enumerate(batch):
        y_hat = loss_augmented_decode(w, X, y_star, cfg, loss) if y_hats is None else y_hats[i]
        d = joint_features(X, y_hat, cfg, C) - joint_features(X, y_star, cfg, C)
        total += loss_value(loss, y_star, y_hat) + w.dot(d)
        diff = diff + d
        chosen.append(np.asarray(y_hat))
    return total, diff, chosen


def ssvm_objective(w, batch, cfg, tc: TrainConfig, y_hats=None) -> float:
    """J(w); with ``y_hats`` given this is the fixed-maximizer surrogate J(w; y_hat)."""
    h, _, _ = hinge_terms(w, batch, cfg, tc.loss, y_hats)
    return reg_value(w, tc.regularizer) + tc.C_reg / len(batch) * h


def ssvm_subgradient(
    w: WeightSet, batch: Sequence[Sample], cfg: PotentialConfig, tc: TrainConfig, y_hats=None
) -> WeightSet:
    if not batch:
        raise ValueError("empty batch")
    _, diff, _ = hinge_terms(w, batch, cfg, tc.loss, y_hats)
    return reg_grad(w, tc.regularizer) + diff * (tc.C_reg / len(batch))


# -- Adagrad ---------------------------------------------------------------


@dataclass
class AdagradState:
    """Running sum of squared gradients, same layout as the weights."""

    accum: WeightSet

    @classmethod
    def like(cls, w: WeightSet) -> "AdagradState":
        return cls(w.map(np.zeros_like))


def _adagrad_array(state, w, g, eta, eps):
    state = state + g * g
    denom = np.sqrt(state) + eps
    step = np.divide(g, denom, out=np.zeros_like(g, dtype=float), where=denom > 0)
    return w - eta * step, state


def adagrad_step(state, w, g, eta: float, eps: float = 1e-8):
    """One Adagrad update; works on arrays or on :class:`WeightSet` / :class:`AdagradState`.

    Coordinates whose accumulated squared gradient is still zero do not move.
    """
    if isinstance(w, WeightSet):
        acc = state.accum if isinstance(state, AdagradState) else state
        new_w, new_acc = {}, {}
        for p in w:
            new_w[p], new_acc[p] = _adagrad_array(acc[p], w[p], g[p], eta, eps)
        return WeightSet(new_w), AdagradState(WeightSet(new_acc))
    return _adagrad_array(np.asarray(state, float), np.asarray(w, float), np.asarray(g, float), eta, eps)


# -- training --------------------------------------------------------------


def _check_dataset(dataset: Sequence[Sample], cfg: PotentialConfig, num_classes: int):
    if not dataset:
        raise ValueError("empty dataset")
    out = []
    for i, (X, y) in enumerate(dataset):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] != cfg.feature_dim:
            raise ValueError(f"sample {i}: features must be T x {cfg.feature_dim}, got {X.shape}")
        y = check_labels(y, num_classes)
        if y.size != X.shape[0]:
            raise ValueError(f"sample {i}: {y.size} labels for {X.shape[0]} frames")
        out.append((X, y))
    return out


def train_ssvm(
    dataset: Sequence[Sample],
    cfg: PotentialConfig,
    tc: TrainConfig,
    num_classes: int,
) -> tuple[WeightSet, list[float]]:
    """Train from zero weights; returns the weights and J(w) after each epoch."""
    data = _check_dataset(dataset, cfg, num_classes)
    rng = np.random.default_rng(tc.seed)
    w = WeightSet.zeros(cfg, num_classes)
    state = AdagradState.like(w)
    trace = []
    for epoch in range(tc.epochs):
        order = rng.permutation(len(data))
        for i in range(0, len(order), tc.batch_size):
            batch = [data[j] for j in order[i : i + tc.batch_size]]
            g = ssvm_subgradient(w, batch, cfg, tc)
            w, state = adagrad_step(state, w, g, tc.eta, tc.adagrad_epsilon)
        trace.append(ssvm_objective(w, data, cfg, tc))
        log.debug("epoch %d objective %.6g", epoch + 1, trace[-1])
    return w, trace


def training_error(w: WeightSet, dataset: Sequence[Sample], cfg: PotentialConfig) -> int:
    """Total Hamming error of plain decoding over the dataset."""
    return sum(hamming_loss(y, framewise_decode(w, X, cfg)) for X, y in dataset)


# -- recurrent baseline ------------------------------------------------------


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def rnn_baseline_forward(w_u, w_p, X, prev_labels=None):
    """Activations ``a[t, c] = sigmoid(w_u[c] . X_t + w_p[y_{t-1}, c])``.

    ``y_{t-1}`` is the argmax of the previous activations unless
    ``prev_labels`` pins it. The first frame has no recurrent term.
    """
    w_u, w_p = np.asarray(w_u, float), np.asarray(w_p, float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T, C = X.shape[0], w_u.shape[0]
    a = np.empty((T, C))
    y = np.empty(T, dtype=np.int64)
    for t in range(T):
        z = w_u @ X[t]
        if t > 0:
            prev = y[t - 1] if prev_labels is None else prev_labels[t - 1]
            z = z + w_p[prev]
        a[t] = _sigmoid(z)
        y[t] = int(np.argmax(a[t]))
    return a, y


def rnn_objective(w_u, w_p, X, y_star, prev_labels=None) -> float:
    a, _ = rnn_baseline_forward(w_u, w_p, X, prev_labels)
    target = np.eye(a.shape[1])[check_labels(y_star)]
    return 0.5 * float(((target - a) ** 2).sum())


def rnn_baseline_grads(w_u, w_p, X, y_star, corrected: bool = False):
    """Gradients of the squared-error objective of the recurrent baseline.

    By default returns ``sum_t e_t X_t^T`` and ``sum_t e_t`` scattered onto the
    previous label's row, with ``e_t = y*_t - a_t``; this is a descent
    direction (to be added) and omits the sigmoid derivative. With
    ``corrected=True`` it returns the true gradient of the objective along
    the frozen argmax path (to be subtracted).
    """
    w_u, w_p = np.asarray(w_u, float), np.asarray(w_p, float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    a, y = rnn_baseline_forward(w_u, w_p, X)
    target = np.eye(a.shape[1])[check_labels(y_star, a.shape[1])]
    e = target - a
    if corrected:
        e = -e * a * (1.0 - a)
    grad_u = e.T @ X
    grad_p = np.zeros_like(w_p)
    np.add.at(grad_p, y[:-1], e[1:])
    return grad_u, grad_p


__all__ = [
    "Regularizer",
    "TrainConfig",
    "AdagradState",
    "jacobi_svd",
    "reg_value",
    "reg_grad",
    "hamming_loss",
    "overlap_loss",
    "loss_augmented_decode",
    "ssvm_objective",
    "ssvm_subgradient",
    "adagrad_step",
    "train_ssvm",
    "training_error",
    "rnn_baseline_forward",
    "rnn_objective",
    "rnn_baseline_grads",
]
