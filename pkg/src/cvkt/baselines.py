"""Zero and mean imputation baselines for kernel matrices."""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError
from .kernels import KernelMatrix


def zero_impute(K: KernelMatrix) -> KernelMatrix:
    """Fill every invalid entry with 0; the observed block is untouched."""
    values = K.values.copy()
    values[np.isnan(values)] = 0.0
    return KernelMatrix(values)


def mean_impute(K: KernelMatrix) -> KernelMatrix:
    """Fill every invalid entry with the observed block's mean (diagonal
    included); the observed block is untouched."""
    block = K.observed_block
    if block.size == 0:
        raise ArgumentError("cannot mean-impute a kernel with no observed entries")
    values = K.values.copy()
    values[np.isnan(values)] = float(block.mean())
    return KernelMatrix(values)
