"""Cross-validation over the approximation level and transfer rank.

Scoring hides a holdout of the target view's *known* samples, completes the
view from the remaining ones, and measures the uncentered cosine
dissimilarity on the held-out block. The true kernel of genuinely missing
samples is never consulted: the holdout protocol is the only
information-legal way to score a completion in deployment. (For benchmark
parity an oracle variant that scores against the full ground-truth kernel is
available by passing ``truth``.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    CvktError,
    DegenerateInputError,
    SelectionError,
)
from .transfer import OptimizerOptions, complete_view


@dataclass(frozen=True)
class CvGrid:
    landmark_fractions: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0)
    rank_fractions: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0)
    holdout_fraction: float = 0.25
    folds: int = 1
    seed: int = 0

    def __post_init__(self):
        for f in tuple(self.landmark_fractions) + tuple(self.rank_fractions):
            if not 0 < f <= 1:
                raise ArgumentError(f"grid fractions must be in (0, 1], got {f}")
        if not self.landmark_fractions or not self.rank_fractions:
            raise ArgumentError("grids must be nonempty")
        if not 0 < self.holdout_fraction < 1:
            raise ArgumentError("holdout_fraction must be in (0, 1)")
        if self.folds < 1:
            raise ArgumentError("folds must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "CvGrid":
        kwargs = dict(d)
        for key in ("landmark_fractions", "rank_fractions"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def _single_view_ca(truth_block: np.ndarray, pred_block: np.ndarray) -> float:
    nt = float(np.linalg.norm(truth_block))
    np_ = float(np.linalg.norm(pred_block))
    if nt < 1e-12 or np_ < 1e-12:
        raise DegenerateInputError("zero-norm block in CV scoring")
    return 1.0 - float(np.trace(truth_block @ pred_block)) / (nt * np_)


def resolve_rank(rank_fraction: float, psi_columns: int) -> int:
    """Integer rank for a fraction of the stacked feature width."""
    return max(1, int(rank_fraction * psi_columns))


def cross_validate(
    dataset,
    view: int,
    grid: CvGrid,
    opts: OptimizerOptions,
    apply_postprocess: bool = True,
    truth=None,
    return_details: bool = False,
):
    """Pick (landmark_fraction, rank) for one view by holdout CA.

    Evaluates every grid point on every fold and returns the winner as
    ``(landmark_fraction, rank, mean_ca)``; ties prefer the smaller fraction,
    then the smaller rank. With ``return_details`` a list of
    ``(landmark_fraction, rank_fraction, rank, mean_ca)`` rows is appended to
    the return value. ``truth`` switches scoring to the oracle protocol
    (full-matrix CA against the true kernel).
    """
    obs = dataset.masks[view]
    holdout = max(1, int(grid.holdout_fraction * obs.size))
    if obs.size - holdout < 2:
        raise ArgumentError(
            f"view {view} has {obs.size} observed samples; holdout {holdout} "
            "leaves fewer than 2 for training"
        )

    folds = []
    for f in range(grid.folds):
        rng = np.random.default_rng(grid.seed + f)
        held_pos = np.sort(rng.choice(obs.size, size=holdout, replace=False))
        held = obs[held_pos]
        keep = np.ones(obs.size, dtype=bool)
        keep[held_pos] = False
        folds.append((dataset.with_mask(view, obs[keep]), held))

    truth_full = truth.kernel(view).values if truth is not None else None
    known = dataset.kernel(view).values

    def psi_columns(lf: float) -> int:
        return sum(
            math.ceil(lf * dataset.masks[w].size)
            for w in range(dataset.V)
            if w != view
        )

    def evaluate(lf: float, rf: float) -> tuple[float, int]:
        rank = resolve_rank(rf, psi_columns(lf))
        scores = []
        for train_ds, held in folds:
            try:
                result = complete_view(
                    train_ds, view, lf, rank, opts, apply_postprocess
                )
                pred = result.kernel.values
                if truth_full is not None:
                    scores.append(_single_view_ca(truth_full, pred))
                else:
                    block = np.ix_(held, held)
                    scores.append(_single_view_ca(known[block], pred[block]))
            except CvktError:
                return math.inf, rank
        return float(np.mean(scores)), rank

    rows = []
    for lf in grid.landmark_fractions:
        for rf in grid.rank_fractions:
            score, rank = evaluate(lf, rf)
            rows.append((score, lf, rank, rf))

    best = min(rows, key=lambda t: (t[0], t[1], t[2]))
    if not math.isfinite(best[0]):
        raise SelectionError("every grid point was degenerate")
    result = (best[1], best[2], best[0])
    if return_details:
        return result, [(lf, rf, rank, score) for score, lf, rank, rf in rows]
    return result
