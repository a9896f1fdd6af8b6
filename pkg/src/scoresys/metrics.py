"""Exact evaluation primitives: logistic loss, empirical AUC, buffered AUC.

Buffered AUC is one minus the buffered probability that the pairwise ranking
error is nonnegative; the inner minimization is solved exactly by breakpoint
enumeration of a piecewise-linear convex function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import BinaryDataset


@dataclass(frozen=True)
class ScoreSample:
    pos_scores: np.ndarray
    neg_scores: np.ndarray

    def __post_init__(self):
        if len(self.pos_scores) == 0 or len(self.neg_scores) == 0:
            raise ValueError("both classes must be non-empty")


@dataclass(frozen=True)
class WeightedSamples:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.weights):
            raise ValueError("values and weights must have matching length")
        if len(self.weights) and not np.all(np.asarray(self.weights) > 0):
            raise ValueError("weights must be positive")


def logistic_loss(u):
    """log(1 + exp(-u)), overflow-safe for any magnitude of u."""
    out = np.logaddexp(0.0, -np.asarray(u, dtype=float))
    return float(out) if np.isscalar(u) or np.ndim(u) == 0 else out


def auc(sample: ScoreSample, tie_mode: str = "half") -> float:
    """Probability that a positive outscores a negative.

    "strict" gives ties zero credit (the pairwise indicator form exactly);
    "half" credits ties 0.5, the trapezoidal-ROC convention. Computed by a
    rank/searchsorted path that agrees with the O(n_pos * n_neg) oracle.
    """
    if tie_mode not in ("strict", "half"):
        raise ValueError(f"tie_mode must be 'strict' or 'half', got {tie_mode!r}")
    pos = np.asarray(sample.pos_scores, dtype=float)
    neg = np.sort(np.asarray(sample.neg_scores, dtype=float))
    below = np.searchsorted(neg, pos, side="left")
    upto = np.searchsorted(neg, pos, side="right")
    wins = float(below.sum())
    ties = float((upto - below).sum())
    total = pos.size * neg.size
    if tie_mode == "strict":
        return wins / total
    return (wins + 0.5 * ties) / total


def auc_pairwise(sample: ScoreSample, tie_mode: str = "half") -> float:
    """Quadratic-time oracle for ``auc``; kept independent of the rank path."""
    pos = np.asarray(sample.pos_scores, dtype=float)[:, None]
    neg = np.asarray(sample.neg_scores, dtype=float)[None, :]
    wins = float((pos > neg).sum())
    ties = float((pos == neg).sum())
    total = pos.size * neg.size
    if tie_mode == "strict":
        return wins / total
    return (wins + 0.5 * ties) / total


def bpoe_at_zero(e: WeightedSamples) -> float:
    """Buffered probability that a weighted sample is nonnegative.

    Returns min over a >= 0 of sum_k w_k [a v_k + 1]_+ / sum_k w_k. The
    objective is convex piecewise-linear in a with breakpoints at -1/v_k for
    v_k < 0, so the exact minimum is attained at a = 0 or at a breakpoint.
    """
    v = np.asarray(e.values, dtype=float)
    w = np.asarray(e.weights, dtype=float)
    total = w.sum()
    if not (v < 0).any():
        return 1.0  # a = 0 gives exactly 1 and nothing can improve on it
    order = np.argsort(v, kind="stable")
    vs = v[order]
    ws = w[order]
    # suffix sums over values strictly greater than each candidate breakpoint
    w_suffix = np.append(np.cumsum(ws[::-1])[::-1], 0.0)
    wv_suffix = np.append(np.cumsum((ws * vs)[::-1])[::-1], 0.0)
    cand = np.unique(vs[vs < 0])
    a = -1.0 / cand
    # terms with v > breakpoint value stay active; the tied terms are exactly 0
    j = np.searchsorted(vs, cand, side="right")
    vals = (w_suffix[j] + a * wv_suffix[j]) / total
    best = min(1.0, float(vals.min()))
    return max(0.0, best)


def ranking_error_samples(w: np.ndarray, data: BinaryDataset) -> WeightedSamples:
    """Distribution of w . (x_neg - x_pos) over all positive-negative pairs,
    deduplicated at the score level."""
    if data.n_pos == 0 or data.n_neg == 0:
        raise ValueError("ranking errors need both classes")
    scores = data.x.astype(float) @ np.asarray(w, dtype=float)
    sp, cp = np.unique(scores[data.y == 1], return_counts=True)
    sn, cn = np.unique(scores[data.y == -1], return_counts=True)
    values = (sn[:, None] - sp[None, :]).ravel()
    weights = (cn[:, None] * cp[None, :]).ravel()
    return WeightedSamples(values=values, weights=weights)


def bauc(w: np.ndarray, data: BinaryDataset) -> float:
    """Buffered AUC of linear scores w . x on the dataset; a concave lower
    bound on the strict empirical AUC."""
    return 1.0 - bpoe_at_zero(ranking_error_samples(w, data))


def score_sample(w: np.ndarray, data: BinaryDataset, w0: float = 0.0) -> ScoreSample:
    scores = data.x.astype(float) @ np.asarray(w, dtype=float) + w0
    return ScoreSample(pos_scores=scores[data.y == 1], neg_scores=scores[data.y == -1])


def negative_log_likelihood(w0: float, w: np.ndarray, data: BinaryDataset) -> float:
    margins = data.y * (data.x.astype(float) @ np.asarray(w, dtype=float) + w0)
    return float(np.logaddexp(0.0, -margins).sum())
