"""Gram matrix construction, centering, alignment and fixed-weight combinations.

Kernel matrices carry an explicit set of observed sample indices; entries in
rows/columns of unobserved samples are held as NaN and are never fed into any
computation. The observed block must be symmetric, and producers of genuine
Gram matrices additionally guarantee it is positive semi-definite (checked via
:meth:`KernelMatrix.require_psd`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    NotPSDError,
)

# Relative eigenvalue slack for the PSD contract on observed blocks.
PSD_REL_TOL = 1e-8
# Centered Frobenius norms below this are treated as degenerate.
DEGENERATE_NORM_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of a kernel function.

    ``kind`` is one of ``linear``, ``rbf``, ``chi2`` or ``sum``. For ``rbf``
    and ``chi2``, ``gamma`` may be left as None to request a data-driven
    bandwidth: 1 / (d * median pairwise squared distance) for RBF, and
    1 / (median pairwise chi-squared divergence) for chi2, both computed over
    the rows the Gram matrix is built from.
    """

    kind: str
    gamma: float | None = None
    terms: tuple[tuple["KernelSpec", float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("linear", "rbf", "chi2", "sum"):
            raise ArgumentError(f"unknown kernel kind {self.kind!r}")
        if self.kind in ("rbf", "chi2"):
            if self.gamma is not None and not self.gamma > 0:
                raise ArgumentError(f"gamma must be positive, got {self.gamma}")
        elif self.gamma is not None:
            raise ArgumentError(f"gamma is not a parameter of {self.kind!r} kernels")
        if self.kind == "sum":
            if not self.terms:
                raise ArgumentError("sum kernel needs at least one term")
            for spec, weight in self.terms:
                if weight < 0:
                    raise ArgumentError(f"sum weights must be nonnegative, got {weight}")
        elif self.terms:
            raise ArgumentError(f"terms are only valid for sum kernels, not {self.kind!r}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def rbf(cls, gamma: float | None = None) -> "KernelSpec":
        return cls("rbf", gamma=gamma)

    @classmethod
    def chi2(cls, gamma: float | None = None) -> "KernelSpec":
        return cls("chi2", gamma=gamma)

    @classmethod
    def weighted_sum(
        cls, specs: Sequence["KernelSpec"], weights: Sequence[float]
    ) -> "KernelSpec":
        if len(specs) != len(weights):
            raise ArgumentError("specs and weights must have equal length")
        return cls("sum", terms=tuple(zip(specs, (float(w) for w in weights))))

    def to_dict(self) -> dict:
        if self.kind == "sum":
            return {
                "kind": "sum",
                "terms": [
                    {"weight": w, "spec": s.to_dict()} for s, w in self.terms
                ],
            }
        out: dict = {"kind": self.kind}
        if self.kind in ("rbf", "chi2"):
            out["gamma"] = self.gamma
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        kind = d.get("kind")
        if kind == "sum":
            terms = d.get("terms")
            if not isinstance(terms, list):
                raise ArgumentError("sum kernel spec needs a 'terms' list")
            specs = [cls.from_dict(t["spec"]) for t in terms]
            weights = [t["weight"] for t in terms]
            return cls.weighted_sum(specs, weights)
        if kind in ("rbf", "chi2"):
            return cls(kind, gamma=d.get("gamma"))
        if kind == "linear":
            return cls("linear")
        raise ArgumentError(f"unknown kernel kind {kind!r}")


@dataclass
class KernelMatrix:
    """A symmetric kernel matrix with an explicit observed-index set.

    ``values`` is n x n; rows/columns outside ``observed`` are kept as NaN.
    ``observed`` preserves the order it was given in (block extraction and
    landmark choice follow that order), though on-disk manifests always store
    it ascending.
    """

    values: np.ndarray
    observed: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionError(f"kernel matrix must be square, got {values.shape}")
        n = values.shape[0]
        if n == 0:
            raise DimensionError("kernel matrix must be nonempty")
        if self.observed is None:
            observed = np.arange(n)
        else:
            observed = np.asarray(self.observed, dtype=int)
        if observed.ndim != 1 or len(np.unique(observed)) != observed.size:
            raise ArgumentError("observed indices must be a 1-d set without repeats")
        if observed.size and (observed.min() < 0 or observed.max() >= n):
            raise ArgumentError(f"observed indices out of range for n={n}")

        block = values[np.ix_(observed, observed)]
        if np.isnan(block).any():
            raise DomainError("observed block contains NaN entries")
        asym = np.max(np.abs(block - block.T)) if block.size else 0.0
        scale = max(np.max(np.abs(block)) if block.size else 0.0, 1.0)
        if asym > 1e-10 * scale:
            raise DomainError(
                f"observed block is not symmetric (max asymmetry {asym:.3e})"
            )

        mask = np.zeros(n, dtype=bool)
        mask[observed] = True
        values[~mask, :] = np.nan
        values[:, ~mask] = np.nan
        self.values = values
        self.observed = observed

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def observed_block(self) -> np.ndarray:
        """Square block of valid entries, rows/cols in ``observed`` order."""
        return self.values[np.ix_(self.observed, self.observed)]

    @property
    def missing(self) -> np.ndarray:
        """Ascending indices of unobserved samples."""
        mask = np.ones(self.n, dtype=bool)
        mask[self.observed] = False
        return np.flatnonzero(mask)

    @property
    def is_fully_observed(self) -> bool:
        return self.observed.size == self.n

    def require_psd(self, rel_tol: float = PSD_REL_TOL) -> None:
        """Raise :class:`NotPSDError` unless min eig >= -rel_tol * max eig on
        the observed block."""
        block = self.observed_block
        if block.size == 0:
            return
        eigvals = np.linalg.eigvalsh(0.5 * (block + block.T))
        lo, hi = eigvals.min(), eigvals.max()
        if lo < -rel_tol * max(hi, 0.0):
            raise NotPSDError(
                f"observed block has eigenvalue {lo:.3e} below -{rel_tol:.0e} * {hi:.3e}"
            )

    def restricted(self, observed: np.ndarray) -> "KernelMatrix":
        """Same values with a (typically smaller) observed set."""
        return KernelMatrix(self.values, np.asarray(observed, dtype=int))


def _pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _chi2_divergences(X: np.ndarray) -> np.ndarray:
    # sum_i (x_i - z_i)^2 / (x_i + z_i), with 0/0 summands treated as 0
    diff = X[:, None, :] - X[None, :, :]
    tot = X[:, None, :] + X[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(tot > 0, diff * diff / np.where(tot > 0, tot, 1.0), 0.0)
    return ratio.sum(axis=2)


def _median_gamma_rbf(X: np.ndarray) -> float:
    d2 = _pairwise_sq_dists(X)
    off = d2[~np.eye(X.shape[0], dtype=bool)]
    med = float(np.median(off)) if off.size else 0.0
    if med <= 0:
        return 1.0
    return 1.0 / (X.shape[1] * med)


def _median_gamma_chi2(X: np.ndarray) -> float:
    div = _chi2_divergences(X)
    off = div[~np.eye(X.shape[0], dtype=bool)]
    med = float(np.median(off)) if off.size else 0.0
    if med <= 0:
        return 1.0
    return 1.0 / med


def gram_matrix(X: np.ndarray, spec: KernelSpec) -> KernelMatrix:
    """Build the full Gram matrix of ``spec`` over the rows of ``X``.

    Parameters
    ----------
    X : ndarray, shape (n, d)
        Feature rows; must be finite, and nonnegative for chi2 kernels.
    spec : KernelSpec
        Kernel to evaluate on all row pairs.

    Returns
    -------
    KernelMatrix
        Fully observed n x n kernel matrix.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DimensionError(f"feature matrix must be nonempty 2-d, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise DomainError("feature matrix contains NaN or infinite entries")
    values = _gram_values(X, spec)
    return KernelMatrix(values)


def _gram_values(X: np.ndarray, spec: KernelSpec) -> np.ndarray:
    if spec.kind == "linear":
        K = X @ X.T
        return 0.5 * (K + K.T)
    if spec.kind == "rbf":
        gamma = spec.gamma if spec.gamma is not None else _median_gamma_rbf(X)
        d2 = _pairwise_sq_dists(X)
        K = np.exp(-gamma * d2)
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
        return K
    if spec.kind == "chi2":
        if (X < 0).any():
            raise DomainError("chi2 kernel requires nonnegative features")
        gamma = spec.gamma if spec.gamma is not None else _median_gamma_chi2(X)
        K = np.exp(-gamma * _chi2_divergences(X))
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
        return K
    # sum
    acc = np.zeros((X.shape[0], X.shape[0]))
    for child, weight in spec.terms:
        acc += weight * _gram_values(X, child)
    return acc


def center(M: np.ndarray) -> np.ndarray:
    """Conjugate by the centering projector: subtract row means, column means
    and add back the grand mean. Output has zero row and column sums."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"centering needs a square matrix, got {M.shape}")
    row = M.mean(axis=1, keepdims=True)
    col = M.mean(axis=0, keepdims=True)
    return M - row - col + M.mean()


def alignment(M: np.ndarray, N: np.ndarray) -> float:
    """Cosine similarity of two matrices after centering both.

    Returns a value in [-1, 1]; raises :class:`DegenerateInputError` when
    either centered matrix has (numerically) zero Frobenius norm, e.g. for
    constant matrices.
    """
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    if M.shape != N.shape:
        raise DimensionError(f"shape mismatch {M.shape} vs {N.shape}")
    Mc = center(M)
    Nc = center(N)
    nm = float(np.linalg.norm(Mc))
    nn = float(np.linalg.norm(Nc))
    if nm < DEGENERATE_NORM_TOL or nn < DEGENERATE_NORM_TOL:
        raise DegenerateInputError(
            "centered matrix has ~zero norm; alignment undefined for constant matrices"
        )
    return float(np.clip(np.sum(Mc * Nc) / (nm * nn), -1.0, 1.0))


def combine_kernels(
    kernels: Sequence[KernelMatrix], weights: Sequence[float]
) -> KernelMatrix:
    """Entrywise weighted sum of per-view kernels.

    The result is valid only where every input view is observed; its observed
    set is the intersection of the inputs' observed sets (in the order of the
    first input).
    """
    if len(kernels) == 0:
        raise ArgumentError("need at least one kernel to combine")
    if len(kernels) != len(weights):
        raise ArgumentError("kernels and weights must have equal length")
    for w in weights:
        if w < 0:
            raise ArgumentError(f"weights must be nonnegative, got {w}")
    n = kernels[0].n
    for K in kernels[1:]:
        if K.n != n:
            raise DimensionError(f"kernel sizes differ: {K.n} vs {n}")

    common = set(kernels[0].observed.tolist())
    for K in kernels[1:]:
        common &= set(K.observed.tolist())
    observed = np.array([i for i in kernels[0].observed if i in common], dtype=int)

    acc = np.zeros((n, n))
    for K, w in zip(kernels, weights):
        filled = np.nan_to_num(K.values, nan=0.0)
        acc += w * filled
    return KernelMatrix(acc, observed)
