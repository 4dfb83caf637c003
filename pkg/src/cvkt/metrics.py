"""Completion-quality metrics and a small downstream classification check.

Completion accuracy (CA) is the uncentered kernel cosine dissimilarity
averaged over views: unlike the alignment used during training, the matrices
enter raw, without centering. The average relative error (ARE) looks only at
rows of originally missing samples. The structural similarity index treats
the matrices as grayscale images.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, DegenerateInputError, DimensionError
from .kernels import KernelMatrix

# Windowed-statistics constants from the original SSIM publication.
SSIM_WINDOW = 7
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class MetricReport:
    ca: float
    are_per_view: list[float]
    ssim_per_view: list[float]


def _full_values(K: "KernelMatrix | np.ndarray") -> np.ndarray:
    values = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    if np.isnan(values).any():
        raise ArgumentError("metric inputs must have all entries valid")
    return values


def completion_accuracy(
    preds: Sequence[KernelMatrix], truths: Sequence[KernelMatrix]
) -> float:
    """Mean over views of 1 - tr(K_true K_pred) / (||K_true|| ||K_pred||)."""
    if len(preds) != len(truths):
        raise ArgumentError("preds and truths must have equal length")
    if len(preds) == 0:
        raise ArgumentError("need at least one view")
    total = 0.0
    for pred, truth in zip(preds, truths):
        P = _full_values(pred)
        T = _full_values(truth)
        if P.shape != T.shape:
            raise DimensionError(f"shape mismatch {P.shape} vs {T.shape}")
        np_, nt = float(np.linalg.norm(P)), float(np.linalg.norm(T))
        if np_ < 1e-12 or nt < 1e-12:
            raise DegenerateInputError("zero-norm kernel matrix in CA")
        total += 1.0 - float(np.trace(T @ P)) / (nt * np_)
    return total / len(preds)


def average_relative_error(
    pred: KernelMatrix, truth: KernelMatrix, missing: np.ndarray
) -> float:
    """Mean relative l2 error of predicted rows at originally missing samples."""
    missing = np.asarray(missing, dtype=int)
    if missing.size == 0:
        raise ArgumentError("missing index set is empty")
    P = _full_values(pred)
    T = _full_values(truth)
    if P.shape != T.shape:
        raise DimensionError(f"shape mismatch {P.shape} vs {T.shape}")
    total = 0.0
    for t in missing:
        denom = float(np.linalg.norm(T[t, :]))
        if denom < 1e-12:
            raise DegenerateInputError(f"truth row {t} has ~zero norm")
        total += float(np.linalg.norm(P[t, :] - T[t, :])) / denom
    return total / missing.size


def _window_means(A: np.ndarray, w: int) -> np.ndarray:
    """Means over all w x w windows fully inside A (stride 1), via prefix sums."""
    S = np.zeros((A.shape[0] + 1, A.shape[1] + 1))
    S[1:, 1:] = np.cumsum(np.cumsum(A, axis=0), axis=1)
    sums = S[w:, w:] - S[:-w, w:] - S[w:, :-w] + S[:-w, :-w]
    return sums / (w * w)


def ssim(pred: "KernelMatrix | np.ndarray", truth: "KernelMatrix | np.ndarray") -> float:
    """Mean local structural similarity of the two matrices seen as images.

    Uses uniform windows (side 7, shrunk to the largest odd size that fits
    small matrices), unbiased local covariances, and stabilisation constants
    C1 = (0.01 L)^2, C2 = (0.03 L)^2 where L is the joint value range of both
    inputs. Identical inputs score 1; the measure is symmetric.
    """
    X = _full_values(pred)
    Y = _full_values(truth)
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Y.shape}")
    if X.ndim != 2:
        raise DimensionError("ssim expects 2-d matrices")

    w = min(SSIM_WINDOW, *X.shape)
    if w % 2 == 0:
        w -= 1
    w = max(w, 1)

    L = float(max(X.max(), Y.max()) - min(X.min(), Y.min()))
    if L == 0.0:
        # both matrices share one constant value, hence identical
        return 1.0
    C1 = (SSIM_K1 * L) ** 2
    C2 = (SSIM_K2 * L) ** 2

    ux = _window_means(X, w)
    uy = _window_means(Y, w)
    uxx = _window_means(X * X, w)
    uyy = _window_means(Y * Y, w)
    uxy = _window_means(X * Y, w)
    if w > 1:
        cov_norm = (w * w) / (w * w - 1.0)  # unbiased local (co)variance
    else:
        cov_norm = 1.0
    vx = cov_norm * (uxx - ux * ux)
    vy = cov_norm * (uyy - uy * uy)
    vxy = cov_norm * (uxy - ux * uy)

    s = ((2 * ux * uy + C1) * (2 * vxy + C2)) / (
        (ux * ux + uy * uy + C1) * (vx + vy + C2)
    )
    return float(s.mean())


def kernel_nn_accuracy(
    K: KernelMatrix,
    labels: Sequence,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
) -> float:
    """Nearest-neighbour accuracy using kernel values as similarities.

    Each test sample takes the label of the training sample with the largest
    kernel value; ties resolve to the lowest training index.
    """
    train_idx = np.asarray(train_idx, dtype=int)
    test_idx = np.asarray(test_idx, dtype=int)
    if train_idx.size == 0 or test_idx.size == 0:
        raise ArgumentError("train and test sets must be nonempty")
    if np.intersect1d(train_idx, test_idx).size:
        raise ArgumentError("train and test sets must be disjoint")
    labels = list(labels)
    for i in np.concatenate([train_idx, test_idx]):
        if i >= len(labels):
            raise ArgumentError(f"no label for sample {i}")

    values = _full_values(K)
    order = np.sort(train_idx)
    hits = 0
    for t in test_idx:
        sims = values[t, order]
        winner = order[int(np.argmax(sims))]  # argmax takes the first maximum
        if labels[winner] == labels[t]:
            hits += 1
    return hits / test_idx.size
