"""Cross-view kernel transfer for multi-view kernel matrix completion."""

from .baselines import mean_impute, zero_impute
from .data import (
    MultiViewDataset,
    SimConfig,
    View,
    apply_missingness,
    load_dataset,
    save_dataset,
    simulate_var_multiview,
)
from .features import FeatureBlock, empirical_features, inv_sqrt_psd, nystrom_features
from .kernels import KernelMatrix, KernelSpec, alignment, center, combine_kernels, gram_matrix
from .metrics import (
    MetricReport,
    average_relative_error,
    completion_accuracy,
    kernel_nn_accuracy,
    ssim,
)
from .modelselect import CvGrid, cross_validate
from .transfer import (
    CompletionReport,
    OptimizerOptions,
    TransferMatrix,
    ViewCompletion,
    assemble_psi,
    complete_all,
    complete_view,
    objective_and_gradient,
    optimize_transfer,
    postprocess,
    predict_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "CompletionReport",
    "CvGrid",
    "FeatureBlock",
    "KernelMatrix",
    "KernelSpec",
    "MetricReport",
    "MultiViewDataset",
    "OptimizerOptions",
    "SimConfig",
    "TransferMatrix",
    "View",
    "ViewCompletion",
    "alignment",
    "apply_missingness",
    "assemble_psi",
    "average_relative_error",
    "center",
    "combine_kernels",
    "complete_all",
    "complete_view",
    "completion_accuracy",
    "cross_validate",
    "empirical_features",
    "gram_matrix",
    "inv_sqrt_psd",
    "kernel_nn_accuracy",
    "load_dataset",
    "mean_impute",
    "nystrom_features",
    "objective_and_gradient",
    "optimize_transfer",
    "postprocess",
    "predict_kernel",
    "save_dataset",
    "simulate_var_multiview",
    "ssim",
    "zero_impute",
]
