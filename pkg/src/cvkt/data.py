"""Multi-view datasets: synthetic generation, missingness masks, disk I/O.

A dataset holds one entry per view (raw features or a kernel matrix), one
observed-index mask per view, and optional labels. On disk a dataset is a
directory with a ``manifest.json`` plus one CSV per view; kernel CSVs write
unobserved entries as the literal ``nan``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    ConfigurationError,
    InfeasibleMaskError,
    ManifestError,
    ValidationError,
)
from .kernels import KernelMatrix, KernelSpec, gram_matrix

MASK_RETRIES = 1000


@dataclass
class View:
    """One view's payload: either an n x n kernel or n x d raw features."""

    kind: str  # "kernel" | "features"
    values: np.ndarray
    spec: KernelSpec | None = None

    def __post_init__(self):
        if self.kind not in ("kernel", "features"):
            raise ArgumentError(f"unknown view kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValidationError("view payload must be 2-d")
        if self.kind == "kernel" and self.values.shape[0] != self.values.shape[1]:
            raise ValidationError(f"kernel view must be square, got {self.values.shape}")
        if self.kind == "features" and self.spec is None:
            raise ValidationError("feature views need a kernel_spec")


@dataclass
class MultiViewDataset:
    views: list[View]
    masks: list[np.ndarray]
    labels: list[str] | None = None

    def __post_init__(self):
        if not self.views:
            raise ValidationError("dataset has no views")
        if len(self.views) != len(self.masks):
            raise ValidationError("one mask per view required")
        n = self.views[0].values.shape[0]
        for v, view in enumerate(self.views):
            if view.values.shape[0] != n:
                raise ValidationError(f"view {v} has {view.values.shape[0]} rows, expected {n}")
        masks = []
        for v, mask in enumerate(self.masks):
            mask = np.asarray(mask, dtype=int)
            if mask.ndim != 1 or len(np.unique(mask)) != mask.size:
                raise ValidationError(f"view {v} mask must be a 1-d set without repeats")
            if mask.size and (mask.min() < 0 or mask.max() >= n):
                raise ValidationError(f"view {v} mask index out of range for n={n}")
            masks.append(mask)
        self.masks = masks
        if self.labels is not None and len(self.labels) != n:
            raise ValidationError(f"expected {n} labels, got {len(self.labels)}")

    @property
    def n(self) -> int:
        return self.views[0].values.shape[0]

    @property
    def V(self) -> int:
        return len(self.views)

    def validate(self) -> None:
        """Check the coverage contracts: every sample observed in at least one
        view, every view with at least two observed samples."""
        covered = np.zeros(self.n, dtype=bool)
        for v, mask in enumerate(self.masks):
            if mask.size < 2:
                raise ValidationError(f"view {v} has fewer than 2 observed samples")
            covered[mask] = True
        if not covered.all():
            orphans = np.flatnonzero(~covered).tolist()
            raise ValidationError(f"samples observed in no view: {orphans}")

    def kernel(self, v: int) -> KernelMatrix:
        """Kernel matrix of view ``v`` under the current mask; computed from
        raw features (observed rows only) when the view stores features."""
        view = self.views[v]
        obs = self.masks[v]
        if view.kind == "kernel":
            return KernelMatrix(view.values, obs)
        X = view.values[obs, :]
        K = gram_matrix(X, view.spec)
        full = np.full((self.n, self.n), np.nan)
        full[np.ix_(obs, obs)] = K.values
        return KernelMatrix(full, obs)

    def with_mask(self, v: int, observed: np.ndarray) -> "MultiViewDataset":
        """Copy of the dataset with view ``v`` restricted to ``observed``."""
        masks = [m.copy() for m in self.masks]
        masks[v] = np.asarray(observed, dtype=int)
        return MultiViewDataset(list(self.views), masks, self.labels)


@dataclass(frozen=True)
class SimConfig:
    """Settings for the switching-parameter autoregressive generator."""

    n: int = 100
    V: int = 7
    series_dim: int = 16
    period: int = 20
    missing_a: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("need at least 2 samples")
        if self.V < 2:
            raise ConfigurationError("need at least 2 views")
        if self.period < 1:
            raise ConfigurationError("period must be >= 1")
        if not 0 <= self.missing_a <= self.V - 1:
            raise ConfigurationError(f"missing_a must be in [0, {self.V - 1}]")
        self.window_layout()  # fails early when series_dim cannot be tiled

    def window_layout(self) -> tuple[int, int]:
        """(width, stride) of the per-view column windows.

        Picks the largest stride whose induced width keeps adjacent windows
        overlapping by at least one column; the V windows tile all columns
        exactly: (V - 1) * stride + width == series_dim.
        """
        for stride in range(self.series_dim, 0, -1):
            width = self.series_dim - (self.V - 1) * stride
            if width >= 2 and width >= stride + 1:
                return width, stride
        raise ConfigurationError(
            f"series_dim={self.series_dim} cannot be split into {self.V} "
            "overlapping windows of width >= 2"
        )


# Spectral radius the random evolution matrices are rescaled to.
VAR_SPECTRAL_RADIUS = 0.95
VAR_NOISE_STD = 0.1


def simulate_var_multiview(cfg: SimConfig) -> MultiViewDataset:
    """Synthetic multi-view data from a memory-1 autoregression whose
    evolution matrix switches every ``cfg.period`` steps.

    The n state vectors are stacked into an n x series_dim matrix; each view
    is an overlapping contiguous column window of it, turned into an RBF
    kernel (median-heuristic bandwidth). All masks start full.
    """
    width, stride = cfg.window_layout()
    rng = np.random.default_rng(cfg.seed)

    n_mats = math.ceil(cfg.n / cfg.period)
    mats = []
    for _ in range(n_mats):
        raw = rng.standard_normal((cfg.series_dim, cfg.series_dim))
        radius = float(np.max(np.abs(np.linalg.eigvals(raw))))
        A = raw * (VAR_SPECTRAL_RADIUS / radius)
        assert np.max(np.abs(np.linalg.eigvals(A))) < 1.0
        mats.append(A)

    series = np.zeros((cfg.n, cfg.series_dim))
    state = rng.normal(0.0, VAR_NOISE_STD, cfg.series_dim)
    series[0] = state
    for t in range(1, cfg.n):
        state = mats[t // cfg.period] @ state + rng.normal(
            0.0, VAR_NOISE_STD, cfg.series_dim
        )
        series[t] = state

    views = []
    masks = []
    for v in range(cfg.V):
        cols = slice(v * stride, v * stride + width)
        K = gram_matrix(series[:, cols], KernelSpec.rbf())
        views.append(View("kernel", K.values, KernelSpec.rbf()))
        masks.append(np.arange(cfg.n))
    return MultiViewDataset(views, masks)


def apply_missingness(
    dataset: MultiViewDataset,
    per_sample_a: int | None = None,
    total_fraction: float | None = None,
    seed: int = 0,
) -> MultiViewDataset:
    """Hide samples from views, keeping every sample observed somewhere and
    every view with at least two observed samples.

    Exactly one of ``per_sample_a`` (each sample loses that many uniformly
    chosen views) and ``total_fraction`` (that fraction of all (view, sample)
    cells is removed uniformly) must be given. Masks are redrawn until the
    coverage constraints hold; persistent failure raises
    :class:`InfeasibleMaskError`.
    """
    if (per_sample_a is None) == (total_fraction is None):
        raise ArgumentError("give exactly one of per_sample_a / total_fraction")
    n, V = dataset.n, dataset.V
    rng = np.random.default_rng(seed)

    observed = np.zeros((n, V), dtype=bool)
    for v, mask in enumerate(dataset.masks):
        observed[mask, v] = True

    if per_sample_a is not None:
        a = int(per_sample_a)
        if not 0 <= a <= V - 1:
            raise ArgumentError(f"per_sample_a must be in [0, {V - 1}]")
        if a == 0:
            return MultiViewDataset(list(dataset.views), list(dataset.masks), dataset.labels)
        for _ in range(MASK_RETRIES):
            new = observed.copy()
            ok = True
            for i in range(n):
                avail = np.flatnonzero(new[i])
                if avail.size <= a:
                    ok = False
                    break
                drop = rng.choice(avail, size=a, replace=False)
                new[i, drop] = False
            if ok and _mask_ok(new):
                return _with_observed(dataset, new)
        raise InfeasibleMaskError(
            f"could not remove {a} views per sample within {MASK_RETRIES} attempts"
        )

    p = float(total_fraction)
    if not 0 <= p < 1:
        raise ArgumentError(f"total_fraction must be in [0, 1), got {p}")
    remove = int(p * n * V)
    if remove == 0:
        return MultiViewDataset(list(dataset.views), list(dataset.masks), dataset.labels)
    cells = np.flatnonzero(observed.ravel())
    if cells.size - remove < max(n, 2 * V):
        raise InfeasibleMaskError(
            f"removing {remove} of {cells.size} observed cells cannot keep "
            "every sample covered and every view populated"
        )
    for _ in range(MASK_RETRIES):
        drop = rng.choice(cells, size=remove, replace=False)
        new = observed.copy()
        new.ravel()[drop] = False
        if _mask_ok(new):
            return _with_observed(dataset, new)
    raise InfeasibleMaskError(
        f"no mask satisfying the coverage constraints found in {MASK_RETRIES} attempts"
    )


def _mask_ok(observed: np.ndarray) -> bool:
    return bool(observed.any(axis=1).all() and (observed.sum(axis=0) >= 2).all())


def _with_observed(dataset: MultiViewDataset, observed: np.ndarray) -> MultiViewDataset:
    masks = [np.flatnonzero(observed[:, v]) for v in range(dataset.V)]
    return MultiViewDataset(list(dataset.views), masks, dataset.labels)


def save_dataset(dataset: MultiViewDataset, dir_path: "str | Path") -> None:
    """Write the dataset as manifest.json + per-view CSVs (+ labels.csv).

    Values round-trip bitwise; observed sets are stored ascending. Kernel
    views write their unobserved entries as ``nan``.
    """
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for v, view in enumerate(dataset.views):
        entry: dict = {
            "observed": sorted(int(i) for i in dataset.masks[v]),
            "kernel_spec": view.spec.to_dict() if view.spec is not None else None,
        }
        if view.kind == "kernel":
            name = f"view{v}.csv"
            entry["kernel_csv"] = name
            values = dataset.kernel(v).values  # masked entries as nan
        else:
            name = f"view{v}_features.csv"
            entry["features_csv"] = name
            values = view.values
        np.savetxt(root / name, values, delimiter=",", fmt="%.17g")
        entries.append(entry)
    manifest = {"n": dataset.n, "V": dataset.V, "views": entries}
    if dataset.labels is not None:
        manifest["labels_csv"] = "labels.csv"
        (root / "labels.csv").write_text(
            "".join(f"{lab}\n" for lab in dataset.labels), encoding="utf-8"
        )
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2), encoding="utf-8"
    )


def load_csv_matrix(path: "str | Path") -> np.ndarray:
    """Read a headerless comma-separated float matrix (``nan`` allowed)."""
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as e:
        raise ValidationError(f"{path}: {e}") from e


def load_dataset(dir_path: "str | Path") -> MultiViewDataset:
    """Load a dataset directory written by :func:`save_dataset`.

    Manifest problems raise :class:`ManifestError` with field diagnostics;
    out-of-range mask indices raise :class:`ValidationError`; referenced files
    that do not exist surface as ``FileNotFoundError``.
    """
    root = Path(dir_path)
    manifest_path = root / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ManifestError(
            f"{manifest_path}: line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e

    for fld in ("n", "V", "views"):
        if fld not in manifest:
            raise ManifestError(f"{manifest_path}: missing field {fld!r}")
    n, V = manifest["n"], manifest["V"]
    if not isinstance(manifest["views"], list) or len(manifest["views"]) != V:
        raise ManifestError(f"{manifest_path}: field 'views' must list {V} entries")

    views = []
    masks = []
    for v, entry in enumerate(manifest["views"]):
        if "observed" not in entry:
            raise ManifestError(f"{manifest_path}: views[{v}]: missing field 'observed'")
        observed = np.asarray(entry["observed"], dtype=int)
        if observed.size and observed.max() >= n:
            raise ValidationError(
                f"views[{v}]: mask index {int(observed.max())} >= n={n}"
            )
        spec = (
            KernelSpec.from_dict(entry["kernel_spec"])
            if entry.get("kernel_spec")
            else None
        )
        if "kernel_csv" in entry:
            values = load_csv_matrix(root / entry["kernel_csv"])
            if values.shape != (n, n):
                raise ValidationError(
                    f"views[{v}]: kernel CSV has shape {values.shape}, expected ({n}, {n})"
                )
            views.append(View("kernel", values, spec))
        elif "features_csv" in entry:
            values = load_csv_matrix(root / entry["features_csv"])
            if values.shape[0] != n:
                raise ValidationError(
                    f"views[{v}]: features CSV has {values.shape[0]} rows, expected {n}"
                )
            if spec is None:
                raise ManifestError(
                    f"{manifest_path}: views[{v}]: feature views need 'kernel_spec'"
                )
            views.append(View("features", values, spec))
        else:
            raise ManifestError(
                f"{manifest_path}: views[{v}]: needs 'kernel_csv' or 'features_csv'"
            )
        masks.append(observed)

    labels = None
    if manifest.get("labels_csv"):
        labels = (root / manifest["labels_csv"]).read_text(encoding="utf-8").splitlines()
    return MultiViewDataset(views, masks, labels)
