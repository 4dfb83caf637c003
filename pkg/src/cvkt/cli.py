"""Command-line interface: simulate, mask, complete, evaluate, benchmark.

Exit codes (one per error class):

  0  success
  2  bad arguments or usage (ArgumentError, argparse)
  3  dataset contract violation (ValidationError)
  4  manifest parse error (ManifestError)
  5  missing file / I/O failure (OSError)
  6  degenerate numeric input (DegenerateInputError, DegenerateTransformError)
  7  inconsistent configuration (ConfigurationError)
  8  infeasible missingness mask (InfeasibleMaskError)
  9  model selection failed (SelectionError)
  10 malformed numeric data (DomainError, DimensionError, NotPSDError)
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import mean_impute, zero_impute
from .data import MultiViewDataset, SimConfig, apply_missingness, load_csv_matrix, load_dataset, save_dataset, simulate_var_multiview
from .errors import (
    ArgumentError,
    ConfigurationError,
    CvktError,
    DegenerateInputError,
    DegenerateTransformError,
    DimensionError,
    DomainError,
    InfeasibleMaskError,
    ManifestError,
    NotPSDError,
    SelectionError,
    ValidationError,
)
from .metrics import MetricReport, average_relative_error, completion_accuracy, ssim
from .modelselect import CvGrid, cross_validate
from .transfer import CompletionReport, OptimizerOptions, ViewCompletion, complete_all

EXIT_CODES: list[tuple[type, int]] = [
    (ArgumentError, 2),
    (ValidationError, 3),
    (ManifestError, 4),
    (DegenerateInputError, 6),
    (DegenerateTransformError, 6),
    (ConfigurationError, 7),
    (InfeasibleMaskError, 8),
    (SelectionError, 9),
    (DomainError, 10),
    (DimensionError, 10),
    (NotPSDError, 10),
]

METHODS = ("cvkt", "zero", "mean")


@dataclass
class RunConfig:
    """Everything a completion/benchmark run needs."""

    dataset_dir: Path
    output_dir: Path
    method: str = "cvkt"
    grid: CvGrid = field(default_factory=CvGrid)
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    postprocess: bool = True
    threads: int = 1
    oracle_cv: bool = False

    def __post_init__(self):
        self.dataset_dir = Path(self.dataset_dir)
        self.output_dir = Path(self.output_dir)
        if not self.dataset_dir.is_dir():
            raise ValidationError(f"dataset directory does not exist: {self.dataset_dir}")
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")


def _config_from_file(path: Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: line {e.lineno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: run config must be a JSON object")
    return raw


def build_run_config(args: argparse.Namespace, dataset_dir: Path, output_dir: Path) -> RunConfig:
    """Merge the optional JSON config file with command-line flags; flags win."""
    raw = _config_from_file(args.config) if getattr(args, "config", None) else {}
    grid_kwargs = dict(raw.get("grid", {}))
    opt_kwargs = dict(raw.get("optimizer", {}))
    if args.seed is not None:
        grid_kwargs["seed"] = args.seed
        opt_kwargs["seed"] = args.seed
    try:
        grid = CvGrid.from_dict(grid_kwargs)
        optimizer = OptimizerOptions(**opt_kwargs)
    except TypeError as e:
        raise ConfigurationError(f"bad grid/optimizer config: {e}") from e
    return RunConfig(
        dataset_dir=dataset_dir,
        output_dir=output_dir,
        method=args.method or raw.get("method", "cvkt"),
        grid=grid,
        optimizer=optimizer,
        postprocess=not args.no_postprocess and raw.get("postprocess", True),
        threads=args.threads or int(raw.get("threads", 1)),
        oracle_cv=bool(getattr(args, "oracle_cv", False) or raw.get("oracle_cv", False)),
    )


def _complete_dataset(
    config: RunConfig, dataset: MultiViewDataset, truth: MultiViewDataset | None = None
) -> CompletionReport:
    """Complete every view with the configured method.

    For the transfer method, views with missing samples get their
    hyperparameters from cross-validation on the configured grid (a
    single-point grid selects that point outright); fully observed views pass
    through.
    """
    dataset.validate()
    if config.method in ("zero", "mean"):
        impute = zero_impute if config.method == "zero" else mean_impute
        views = [
            ViewCompletion(v, impute(dataset.kernel(v)), completed=bool(dataset.masks[v].size < dataset.n))
            for v in range(dataset.V)
        ]
        return CompletionReport(views)

    per_view = {}
    for v in range(dataset.V):
        if dataset.masks[v].size == dataset.n:
            per_view[v] = (1.0, 1)  # pass-through, never used
            continue
        lf, rank, _ = cross_validate(
            dataset,
            v,
            config.grid,
            config.optimizer,
            apply_postprocess=config.postprocess,
            truth=truth if config.oracle_cv else None,
        )
        per_view[v] = (lf, rank)
    return complete_all(
        dataset,
        per_view,
        config.optimizer,
        apply_postprocess=config.postprocess,
        threads=config.threads,
    )


def _write_report(report: CompletionReport, out_dir: Path, method: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = []
    for vc in report.views:
        np.savetxt(out_dir / f"pred_view{vc.view_id}.csv", vc.kernel.values, delimiter=",", fmt="%.17g")
        with open(out_dir / f"trace_view{vc.view_id}.csv", "w", encoding="utf-8") as fh:
            fh.write("iteration,objective\n")
            for it, val in vc.trace:
                fh.write(f"{it},{val:.17g}\n")
        meta.append(
            {
                "view": vc.view_id,
                "completed": vc.completed,
                "landmark_fraction": vc.landmark_fraction,
                "rank": vc.rank,
                "wall_time_s": vc.wall_time,
                "warnings": vc.warnings,
            }
        )
    (out_dir / "report.json").write_text(
        json.dumps({"method": method, "views": meta}, indent=2), encoding="utf-8"
    )


def _evaluate_preds(
    preds: list[np.ndarray], truth: MultiViewDataset, masked: MultiViewDataset
) -> tuple[MetricReport, list[float]]:
    from .kernels import KernelMatrix

    truths = [truth.kernel(v) for v in range(truth.V)]
    for t in truths:
        if not t.is_fully_observed:
            raise ValidationError("truth dataset must be fully observed")
    ca_terms = []
    ares = []
    ssims = []
    for v in range(truth.V):
        pred = KernelMatrix(preds[v])
        ca_terms.append(completion_accuracy([pred], [truths[v]]))
        missing = np.setdiff1d(np.arange(truth.n), masked.masks[v])
        if missing.size:
            ares.append(average_relative_error(pred, truths[v], missing))
        else:
            ares.append(float("nan"))
        ssims.append(ssim(pred, truths[v]))
    report = MetricReport(
        ca=float(np.mean(ca_terms)), are_per_view=ares, ssim_per_view=ssims
    )
    return report, ca_terms


def _results_rows(method: str, truth: MultiViewDataset, report: MetricReport, ca_terms: list[float]):
    rows = []
    for v in range(truth.V):
        rows.append((method, str(v), ca_terms[v], report.are_per_view[v], report.ssim_per_view[v]))
    rows.append(
        (
            method,
            "mean",
            float(np.mean(ca_terms)),
            float(np.nanmean(report.are_per_view)) if report.are_per_view else float("nan"),
            float(np.mean(report.ssim_per_view)),
        )
    )
    return rows


def _write_results(rows, out_dir: Path) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.csv", "w", encoding="utf-8") as fh:
        fh.write("method,view,ca,are,ssim\n")
        for method, view, ca, are, s in rows:
            fh.write(f"{method},{view},{ca:.17g},{are:.17g},{s:.17g}\n")
    header = f"{'method':<8} {'view':>4} {'ca':>8} {'are':>8} {'ssim':>8}"
    lines = [header, "-" * len(header)]
    for method, view, ca, are, s in rows:
        lines.append(f"{method:<8} {view:>4} {ca:>8.3f} {are:>8.3f} {s:>8.3f}")
    table = "\n".join(lines)
    (out_dir / "table.txt").write_text(table + "\n", encoding="utf-8")
    return table


def run_benchmark(config: RunConfig, truth_dir: "str | Path") -> MetricReport:
    """Complete the masked dataset, write predictions and metric tables."""
    masked = load_dataset(config.dataset_dir)
    truth = load_dataset(Path(truth_dir))
    if masked.n != truth.n or masked.V != truth.V:
        raise ValidationError(
            f"masked dataset ({masked.n} samples, {masked.V} views) does not match "
            f"truth ({truth.n} samples, {truth.V} views)"
        )
    report = _complete_dataset(config, masked, truth=truth)
    _write_report(report, config.output_dir, config.method)
    preds = [vc.kernel.values for vc in report.views]
    metrics, ca_terms = _evaluate_preds(preds, truth, masked)
    table = _write_results(_results_rows(config.method, truth, metrics, ca_terms), config.output_dir)
    print(table)
    return metrics


def _cmd_simulate(args) -> int:
    cfg = SimConfig(
        n=args.n,
        V=args.views,
        series_dim=args.series_dim,
        period=args.period,
        seed=args.seed if args.seed is not None else 0,
    )
    dataset = simulate_var_multiview(cfg)
    save_dataset(dataset, args.out)
    print(f"wrote {dataset.V} views x {dataset.n} samples to {args.out}")
    return 0


def _cmd_mask(args) -> int:
    dataset = load_dataset(args.input)
    if (args.per_sample_a is None) == (args.total_fraction is None):
        raise ArgumentError("give exactly one of --per-sample-a / --total-fraction")
    masked = apply_missingness(
        dataset,
        per_sample_a=args.per_sample_a,
        total_fraction=args.total_fraction,
        seed=args.seed if args.seed is not None else 0,
    )
    save_dataset(masked, args.out)
    kept = sum(m.size for m in masked.masks)
    print(f"kept {kept} of {dataset.n * dataset.V} (view, sample) cells; wrote {args.out}")
    return 0


def _cmd_complete(args) -> int:
    config = build_run_config(args, Path(args.input), Path(args.out))
    dataset = load_dataset(config.dataset_dir)
    report = _complete_dataset(config, dataset)
    _write_report(report, config.output_dir, config.method)
    print(f"wrote per-view predictions to {config.output_dir}")
    return 0


def _cmd_evaluate(args) -> int:
    truth = load_dataset(args.truth)
    masked = load_dataset(args.masked)
    if masked.n != truth.n or masked.V != truth.V:
        raise ValidationError("masked and truth datasets disagree on n or V")
    preds = []
    for v in range(truth.V):
        path = Path(args.pred) / f"pred_view{v}.csv"
        values = load_csv_matrix(path)
        if values.shape != (truth.n, truth.n):
            raise ValidationError(f"{path}: expected shape ({truth.n}, {truth.n})")
        preds.append(values)
    metrics, ca_terms = _evaluate_preds(preds, truth, masked)
    out_dir = Path(args.out) if args.out else Path(args.pred)
    table = _write_results(_results_rows(args.method or "pred", truth, metrics, ca_terms), out_dir)
    print(table)
    return 0


def _cmd_benchmark(args) -> int:
    config = build_run_config(args, Path(args.input), Path(args.out))
    run_benchmark(config, args.truth)
    return 0


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run config (grid, optimizer, method, ...)")
    p.add_argument("--seed", type=int, default=None, help="governs all randomness of the run")
    p.add_argument("--threads", type=int, default=0, help="parallel view completions (default 1)")
    p.add_argument("--method", choices=METHODS, default=None, help="completion method")
    p.add_argument("--no-postprocess", action="store_true", help="skip range/mean adjustment")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvkt",
        description="Complete missing rows/columns of multi-view kernel matrices "
        "by cross-view feature transfer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic multi-view dataset")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--views", type=int, default=7)
    p.add_argument("--series-dim", type=int, default=16)
    p.add_argument("--period", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("mask", help="hide samples from views")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--per-sample-a", type=int, default=None, help="views hidden per sample")
    p.add_argument("--total-fraction", type=float, default=None, help="fraction of cells hidden")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("complete", help="complete a masked dataset")
    p.add_argument("--input", required=True, type=Path, help="masked dataset directory")
    p.add_argument("--out", required=True, type=Path)
    _add_run_flags(p)
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, type=Path, help="directory with pred_view<k>.csv")
    p.add_argument("--truth", required=True, type=Path)
    p.add_argument("--masked", required=True, type=Path, help="masked dataset (for ARE rows)")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--method", default=None, help="method label for the tables")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("benchmark", help="complete and score in one run")
    p.add_argument("--input", required=True, type=Path, help="masked dataset directory")
    p.add_argument("--truth", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    _add_run_flags(p)
    p.add_argument("--oracle-cv", action="store_true", help="score CV folds against full ground truth")
    p.set_defaults(func=_cmd_benchmark)
    return parser


def exit_code_for(exc: Exception) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    if isinstance(exc, OSError):
        return 5
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CvktError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
