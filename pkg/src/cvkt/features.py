"""Explicit feature embeddings whose Gram matrix reproduces a given kernel.

Two constructions are provided: the empirical feature map (exact on the
observed block) and Nystrom features built from a random landmark subset.
Both return blocks with n rows where rows of unobserved samples are exactly
zero, so the blocks can be concatenated across views without index juggling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError, NotPSDError
from .kernels import KernelMatrix

# Eigenvalues below this fraction of the largest are dropped from the
# pseudo-inverse square root.
EIG_REL_TOL = 1e-10


@dataclass
class FeatureBlock:
    """An n x m embedding for one view; rows outside ``observed`` are zero."""

    values: np.ndarray
    observed: np.ndarray
    view_id: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] < 1:
            raise DimensionError(f"feature block must be n x m with m >= 1, got {values.shape}")
        observed = np.asarray(self.observed, dtype=int)
        if observed.ndim != 1 or len(np.unique(observed)) != observed.size:
            raise ArgumentError("observed indices must be a 1-d set without repeats")
        if observed.size and (observed.min() < 0 or observed.max() >= values.shape[0]):
            raise ArgumentError("observed indices out of range")
        mask = np.zeros(values.shape[0], dtype=bool)
        mask[observed] = True
        values[~mask, :] = 0.0
        self.values = values
        self.observed = observed

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def inv_sqrt_psd(M: np.ndarray, rel_tol: float = EIG_REL_TOL) -> np.ndarray:
    """Pseudo-inverse square root of a symmetric PSD matrix.

    Eigenvalues above ``rel_tol`` times the largest contribute lambda^(-1/2);
    smaller ones are zeroed. An eigenvalue below ``-rel_tol`` times the
    largest raises :class:`NotPSDError`.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got {M.shape}")
    eigvals, eigvecs = np.linalg.eigh(0.5 * (M + M.T))
    lam_max = float(eigvals.max())
    if eigvals.min() < -rel_tol * lam_max:
        raise NotPSDError(
            f"matrix is not PSD: eigenvalue {eigvals.min():.3e} with max {lam_max:.3e}"
        )
    keep = eigvals > rel_tol * lam_max
    inv = np.zeros_like(eigvals)
    inv[keep] = 1.0 / np.sqrt(eigvals[keep])
    return (eigvecs * inv) @ eigvecs.T


def empirical_features(K: KernelMatrix, view_id: int = 0) -> FeatureBlock:
    """Exact feature map of the observed block: Phi = K_I (K_I)^(-1/2).

    The returned block has m = |I| columns; Phi Phi^T reproduces the observed
    block up to the dropped near-null eigendirections.
    """
    if K.observed.size == 0:
        raise ArgumentError("kernel has no observed samples")
    block = K.observed_block
    phi_obs = block @ inv_sqrt_psd(block)
    values = np.zeros((K.n, block.shape[0]))
    values[K.observed, :] = phi_obs
    return FeatureBlock(values, K.observed, view_id)


def nystrom_features(
    K: KernelMatrix,
    landmark_fraction: float,
    seed: int,
    view_id: int = 0,
) -> FeatureBlock:
    """Low-rank feature map from a random landmark subset of observed samples.

    Draws ceil(landmark_fraction * |I|) landmarks uniformly without
    replacement from the observed set (seeded, kept in observed-set order) and
    returns Phi = K[I, P] (K[P, P])^(-1/2) zero-padded to n rows. With
    landmark_fraction = 1 this coincides with using every observed sample.
    """
    if not 0.0 < landmark_fraction <= 1.0:
        raise ArgumentError(f"landmark_fraction must be in (0, 1], got {landmark_fraction}")
    obs = K.observed
    if obs.size == 0:
        raise ArgumentError("kernel has no observed samples")
    m = int(np.ceil(landmark_fraction * obs.size))
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(obs.size, size=m, replace=False))
    landmarks = obs[positions]
    cols = K.values[np.ix_(obs, landmarks)]
    corner = K.values[np.ix_(landmarks, landmarks)]
    phi_obs = cols @ inv_sqrt_psd(corner)
    values = np.zeros((K.n, m))
    values[obs, :] = phi_obs
    return FeatureBlock(values, obs, view_id)
