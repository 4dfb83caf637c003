"""Cross-view kernel transfer: learn a sphere-constrained linear transform of
the other views' stacked features whose Gram matrix is maximally aligned with
the known block of the target view, then predict the full kernel with it.

The optimization runs Riemannian gradient ascent on the unit Frobenius sphere
with Armijo backtracking, so the objective trace is non-decreasing at every
accepted step. Zero feature rows of unobserved samples contribute nothing to
the learned transform; they only null out the corresponding predictions.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    ConfigurationError,
    DegenerateInputError,
    DegenerateKernelWarning,
    DegenerateTransformError,
    DimensionError,
    MissingOverlapWarning,
    ValidationError,
)
from .features import FeatureBlock, nystrom_features
from .kernels import DEGENERATE_NORM_TOL, KernelMatrix, center

SPHERE_TOL = 1e-10


@dataclass
class TransferMatrix:
    """The learned M x r transform, constrained to unit Frobenius norm."""

    values: np.ndarray
    view_id: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] < 1 or values.shape[1] > values.shape[0]:
            raise DimensionError(
                f"transfer matrix must be M x r with 1 <= r <= M, got {values.shape}"
            )
        nrm = float(np.linalg.norm(values))
        if abs(nrm - 1.0) > SPHERE_TOL:
            raise ArgumentError(f"transfer matrix must have unit Frobenius norm, got {nrm}")
        self.values = values

    @property
    def r(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class OptimizerOptions:
    """First-order ascent settings; defaults are conventional and overridable."""

    max_iters: int = 500
    grad_tol: float = 1e-6
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ArgumentError("max_iters must be >= 0")
        if not self.grad_tol > 0:
            raise ArgumentError("grad_tol must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ArgumentError("backtrack_factor must be in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ArgumentError("armijo_c must be in (0, 1)")
        if not self.step_init > 0:
            raise ArgumentError("step_init must be positive")


@dataclass
class ViewCompletion:
    """Outcome of completing (or passing through) a single view."""

    view_id: int
    kernel: KernelMatrix
    completed: bool
    landmark_fraction: float | None = None
    rank: int | None = None
    trace: list[tuple[int, float]] = field(default_factory=list)
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)


@dataclass
class CompletionReport:
    """Per-view completion results in ascending view order."""

    views: list[ViewCompletion]

    @property
    def kernels(self) -> list[KernelMatrix]:
        return [v.kernel for v in self.views]

    def __getitem__(self, view_id: int) -> ViewCompletion:
        for v in self.views:
            if v.view_id == view_id:
                return v
        raise KeyError(view_id)


def assemble_psi(
    features: Sequence[FeatureBlock],
    target_view: int,
    restrict: np.ndarray | None = None,
) -> FeatureBlock:
    """Concatenate every view's feature block except the target's.

    Blocks are stacked left to right in ascending view order. With ``restrict``
    only those rows are kept, in the given order; otherwise all n rows are
    returned. Zero rows of missing samples are preserved.
    """
    if len(features) < 2:
        raise ArgumentError("need at least two views to transfer from")
    ids = [f.view_id for f in features]
    if len(set(ids)) != len(ids):
        raise ArgumentError("duplicate view ids in feature list")
    if target_view not in ids:
        raise ArgumentError(f"target view {target_view} not among feature blocks")
    n = features[0].n
    for f in features:
        if f.n != n:
            raise DimensionError("feature blocks disagree on sample count")

    sources = sorted(
        (f for f in features if f.view_id != target_view), key=lambda f: f.view_id
    )
    values = np.hstack([f.values for f in sources])

    covered = set()
    for f in sources:
        covered.update(int(i) for i in f.observed)

    if restrict is not None:
        restrict = np.asarray(restrict, dtype=int)
        if restrict.size and (restrict.min() < 0 or restrict.max() >= n):
            raise IndexError(f"restrict index out of range for n={n}")
        values = values[restrict, :]
        observed = np.array(
            [pos for pos, i in enumerate(restrict) if int(i) in covered], dtype=int
        )
    else:
        observed = np.array(sorted(covered), dtype=int)
    return FeatureBlock(values, observed, target_view)


def _as_array(U) -> np.ndarray:
    return np.asarray(getattr(U, "values", U), dtype=float)


def _center_cols(B: np.ndarray) -> np.ndarray:
    return B - B.mean(axis=0, keepdims=True)


def _alignment_terms(P: np.ndarray, Kc: np.ndarray, U: np.ndarray):
    # Z = C P U; the transfer Gram G = Z Z^T is centered on both sides, so
    # ||G||_F = ||Z^T Z||_F and <Kc, G> = tr(Kc Z Z^T).
    Z = _center_cols(P @ U)
    KZ = Kc @ Z
    num = float(np.sum(KZ * Z))
    g_norm = float(np.linalg.norm(Z.T @ Z))
    return Z, KZ, num, g_norm


def objective_and_gradient(
    U: "TransferMatrix | np.ndarray",
    psi_I: FeatureBlock,
    K_I: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Centered alignment between the known block and the transfer kernel,
    with its Euclidean gradient in U.

    ``U`` may be any M x r array; it is not required to sit on the sphere
    (finite-difference checks perturb it off the sphere).
    """
    U = _as_array(U)
    P = psi_I.values
    K_I = np.asarray(K_I, dtype=float)
    if K_I.ndim != 2 or K_I.shape[0] != K_I.shape[1]:
        raise DimensionError(f"known block must be square, got {K_I.shape}")
    if P.shape[0] != K_I.shape[0]:
        raise DimensionError(
            f"feature rows ({P.shape[0]}) must match known block size ({K_I.shape[0]})"
        )
    if U.ndim != 2 or U.shape[0] != P.shape[1]:
        raise DimensionError(
            f"transform rows ({U.shape}) must match feature columns ({P.shape[1]})"
        )

    Kc = center(K_I)
    k_norm = float(np.linalg.norm(Kc))
    if k_norm < DEGENERATE_NORM_TOL:
        raise DegenerateInputError("known block is constant; alignment undefined")

    Z, KZ, num, g_norm = _alignment_terms(P, Kc, U)
    if g_norm < DEGENERATE_NORM_TOL:
        raise DegenerateTransformError("transfer kernel is numerically zero")

    value = num / (k_norm * g_norm)
    # d<Kc,G>/dU = 2 P^T Kc Z ; d||G||/dU = 2 P^T Z (Z^T Z) / ||G||
    grad = (2.0 / (k_norm * g_norm)) * (P.T @ KZ) - (
        value * 2.0 / (g_norm * g_norm)
    ) * (P.T @ (Z @ (Z.T @ Z)))
    return value, grad


def _objective_value(P: np.ndarray, Kc: np.ndarray, k_norm: float, U: np.ndarray) -> float:
    _, _, num, g_norm = _alignment_terms(P, Kc, U)
    if g_norm < DEGENERATE_NORM_TOL:
        raise DegenerateTransformError("transfer kernel is numerically zero")
    return num / (k_norm * g_norm)


def optimize_transfer(
    psi_I: FeatureBlock,
    K_I: np.ndarray,
    r: int,
    opts: OptimizerOptions,
    return_trace: bool = False,
    callback: Callable[[int, np.ndarray, float], None] | None = None,
):
    """Maximize the alignment objective over unit-Frobenius-norm M x r
    transforms by projected gradient ascent with Armijo backtracking.

    The tangent projection is xi = g - <g, U> U and the retraction renormalizes
    U + eta * xi back to the sphere. Stops when the Riemannian gradient norm
    falls below ``opts.grad_tol``, the step search fails, or ``opts.max_iters``
    is reached. Returns the transform, plus the (iteration, objective) trace
    when ``return_trace`` is set.
    """
    P = psi_I.values
    M = P.shape[1]
    if not 1 <= r <= M:
        raise ArgumentError(f"rank must satisfy 1 <= r <= {M}, got {r}")
    K_I = np.asarray(K_I, dtype=float)
    Kc = center(K_I)
    k_norm = float(np.linalg.norm(Kc))
    if k_norm < DEGENERATE_NORM_TOL:
        raise DegenerateInputError("known block is constant; nothing to align to")

    # Directions outside range(P^T) receive zero gradient (the objective only
    # sees P U) yet would corrupt predictions on unobserved rows, so the random
    # start is drawn inside that subspace; the whole trajectory then stays in it.
    rng = np.random.default_rng(opts.seed)
    U = None
    for _ in range(10):
        cand = P.T @ rng.standard_normal((P.shape[0], r))
        nrm = float(np.linalg.norm(cand))
        if nrm < DEGENERATE_NORM_TOL:
            continue
        cand /= nrm
        if np.linalg.norm(_center_cols(P @ cand)) >= DEGENERATE_NORM_TOL:
            U = cand
            break
    if U is None:
        raise DegenerateTransformError("could not find a non-degenerate starting point")

    value, grad = objective_and_gradient(U, psi_I, K_I)
    trace = [(0, value)]
    if callback is not None:
        callback(0, U, value)

    for it in range(1, opts.max_iters + 1):
        xi = grad - float(np.sum(grad * U)) * U
        xi_norm = float(np.linalg.norm(xi))
        if xi_norm < opts.grad_tol:
            break

        step = opts.step_init
        accepted = None
        for _ in range(60):
            cand = U + step * xi
            cand /= np.linalg.norm(cand)
            try:
                cand_value = _objective_value(P, Kc, k_norm, cand)
            except DegenerateTransformError:
                step *= opts.backtrack_factor
                continue
            if cand_value >= value + opts.armijo_c * step * xi_norm * xi_norm:
                accepted = (cand, cand_value)
                break
            step *= opts.backtrack_factor
        if accepted is None:
            break

        U, value = accepted
        grad = objective_and_gradient(U, psi_I, K_I)[1]
        trace.append((it, value))
        if callback is not None:
            callback(it, U, value)

    result = TransferMatrix(U, view_id=psi_I.view_id)
    if return_trace:
        return result, trace
    return result


def predict_kernel(psi: FeatureBlock, U: TransferMatrix) -> KernelMatrix:
    """Gram matrix of the transferred features over all n samples."""
    Uv = _as_array(U)
    if psi.values.shape[1] != Uv.shape[0]:
        raise DimensionError(
            f"feature columns ({psi.values.shape[1]}) must match transform rows ({Uv.shape[0]})"
        )
    B = psi.values @ Uv
    K = B @ B.T
    return KernelMatrix(0.5 * (K + K.T))


def postprocess(
    K_pred: KernelMatrix,
    K_known_block: np.ndarray,
    known_idx: np.ndarray | None = None,
) -> KernelMatrix:
    """Affinely map predicted values onto the known block's statistics.

    First rescales so the full predicted matrix spans the known block's
    [min, max] range, then shifts so the mean over the known block's positions
    (``known_idx``, defaulting to the prediction's observed set) matches the
    known block's mean. A constant prediction degenerates to the known block's
    mean everywhere (with a warning); strict PSD is not preserved in general,
    so PSD-sensitive consumers should skip this step.
    """
    K_known_block = np.asarray(K_known_block, dtype=float)
    if K_known_block.ndim != 2 or K_known_block.shape[0] != K_known_block.shape[1]:
        raise DimensionError(f"known block must be square, got {K_known_block.shape}")
    if known_idx is None:
        known_idx = K_pred.observed
    known_idx = np.asarray(known_idx, dtype=int)
    if known_idx.size != K_known_block.shape[0]:
        raise DimensionError(
            f"known block size {K_known_block.shape[0]} does not match "
            f"{known_idx.size} known positions"
        )
    kmin = float(K_known_block.min())
    kmax = float(K_known_block.max())
    if kmax - kmin <= 0:
        raise DegenerateInputError("known block is constant; post-processing undefined")
    known_mean = float(K_known_block.mean())

    obs = K_pred.observed
    pred = K_pred.values
    pmin = float(np.nanmin(pred))
    pmax = float(np.nanmax(pred))
    if pmax - pmin <= 0:
        warnings.warn(
            "constant predicted kernel; falling back to the known-block mean",
            DegenerateKernelWarning,
        )
        return KernelMatrix(np.full_like(pred, known_mean), obs)

    scaled = (pred - pmin) * ((kmax - kmin) / (pmax - pmin)) + kmin
    block = scaled[np.ix_(known_idx, known_idx)]
    shifted = scaled + (known_mean - float(block.mean()))
    return KernelMatrix(shifted, obs)


def complete_view(
    dataset,
    view: int,
    landmark_fraction: float,
    rank: int,
    opts: OptimizerOptions,
    apply_postprocess: bool = True,
) -> ViewCompletion:
    """Complete one view: extract every view's Nystrom features at the given
    approximation level, learn the transfer on the target's known block, and
    predict the full kernel.

    Views whose observed set already covers all samples are returned
    unchanged, flagged as not completed.
    """
    start = time.perf_counter()
    target = dataset.kernel(view)
    if target.is_fully_observed:
        return ViewCompletion(
            view, target, completed=False, wall_time=time.perf_counter() - start
        )

    V = dataset.V
    base_seed = opts.seed + view
    blocks = []
    for w in range(V):
        Kw = dataset.kernel(w) if w != view else target
        blocks.append(
            nystrom_features(
                Kw, landmark_fraction, seed=base_seed * (V + 1) + w, view_id=w
            )
        )

    notes = []
    obs = target.observed
    for w in range(V):
        if w == view:
            continue
        rows = blocks[w].values[obs, :]
        if not rows.any():
            msg = (
                f"view {w} has no observed overlap with view {view}; its features "
                "cannot inform this completion"
            )
            warnings.warn(msg, MissingOverlapWarning)
            notes.append(msg)

    psi_I = assemble_psi(blocks, view, restrict=obs)
    psi_full = assemble_psi(blocks, view)
    view_opts = replace(opts, seed=base_seed)
    U, trace = optimize_transfer(psi_I, target.observed_block, rank, view_opts, return_trace=True)
    pred = predict_kernel(psi_full, U)
    if apply_postprocess:
        pred = postprocess(pred, target.observed_block, known_idx=obs)
    return ViewCompletion(
        view,
        pred,
        completed=True,
        landmark_fraction=landmark_fraction,
        rank=rank,
        trace=trace,
        wall_time=time.perf_counter() - start,
        warnings=notes,
    )


def complete_all(
    dataset,
    per_view_config: Mapping[int, tuple[float, int]],
    opts: OptimizerOptions,
    apply_postprocess: bool = True,
    threads: int = 1,
) -> CompletionReport:
    """Complete every view of the dataset independently.

    ``per_view_config`` maps each view id to its (landmark_fraction, rank).
    Per-view runs are deterministic given ``opts.seed`` (each view derives its
    own seed), so serial and threaded execution produce identical reports.
    """
    dataset.validate()
    V = dataset.V
    missing_cfg = [v for v in range(V) if v not in per_view_config]
    if missing_cfg:
        raise ConfigurationError(f"per_view_config has no entry for views {missing_cfg}")

    def run(v: int) -> ViewCompletion:
        frac, rank = per_view_config[v]
        return complete_view(dataset, v, frac, rank, opts, apply_postprocess)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            views = list(pool.map(run, range(V)))
    else:
        views = [run(v) for v in range(V)]
    return CompletionReport(views)
