"""Downstream analysis: convergence diagnostics, posterior summaries,
ranking, and ROC evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .types import DataError


def rhat(traces: Sequence[np.ndarray]) -> float:
    """Gelman-Rubin potential scale reduction factor for one scalar.

    traces: one array of retained draws per chain.  Uses the classic
    two-part form sqrt(((n-1)/n * W + B/n) / W).  Identical constant
    chains (W = B = 0) return 1.0 by convention.
    """
    if len(traces) < 2:
        raise DataError("rhat requires at least 2 chains")
    arrs = [np.asarray(t, dtype=float) for t in traces]
    n = min(len(a) for a in arrs)
    if n < 10:
        raise DataError("rhat requires at least 10 retained draws per chain")
    arrs = [a[:n] for a in arrs]
    means = np.array([a.mean() for a in arrs])
    variances = np.array([a.var(ddof=1) for a in arrs])
    W = float(variances.mean())
    B_over_n = float(means.var(ddof=1))
    if W == 0.0:
        return 1.0 if B_over_n == 0.0 else float("inf")
    v_hat = (n - 1) / n * W + B_over_n
    return float(np.sqrt(v_hat / W))


@dataclass(frozen=True)
class CorrelationSummary:
    """Posterior mean and 95% interval per correlation pair."""

    labels: tuple
    mean: np.ndarray  # d x d, unit diagonal
    lo: np.ndarray
    hi: np.ndarray


def posterior_correlations(sigma_draws: Sequence[np.ndarray], labels=None) -> CorrelationSummary:
    """Summarize draw-wise correlation matrices from covariance draws.

    Each draw is converted to a correlation matrix; per off-diagonal
    pair we report the posterior mean plus equal-tailed (2.5%, 97.5%)
    sample quantiles of the draw-wise correlations.
    """
    draws = list(sigma_draws)
    if len(draws) < 100:
        raise DataError("posterior_correlations requires at least 100 draws")
    d = draws[0].shape[0]
    stacked = np.stack(draws)
    sd = np.sqrt(np.einsum("nii->ni", stacked))
    corr = stacked / (sd[:, :, None] * sd[:, None, :])
    mean = corr.mean(axis=0)
    lo = np.quantile(corr, 0.025, axis=0)
    hi = np.quantile(corr, 0.975, axis=0)
    for M in (mean, lo, hi):
        np.fill_diagonal(M, 1.0)
    if labels is None:
        labels = tuple(str(j) for j in range(d))
    return CorrelationSummary(tuple(labels), mean, lo, hi)


@dataclass(frozen=True)
class RankTable:
    ids: tuple
    p_hat: np.ndarray
    ranks: np.ndarray  # competition ranking over descending p_hat
    n_tied_first: int

    def rows(self):
        order = np.argsort(self.ranks, kind="stable")
        for i in order:
            yield self.ids[i], float(self.p_hat[i]), int(self.ranks[i])


def rank_items(ids: Sequence[str], p_hat: np.ndarray) -> RankTable:
    """Competition ranking: rank(i) = 1 + #{j : p_j > p_i}; ties share a rank."""
    p = np.asarray(p_hat, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise DataError("probabilities must lie in [0,1]")
    order = np.argsort(-p, kind="stable")
    ranks = np.empty(len(p), dtype=int)
    rank = 1
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and p[order[j]] == p[order[i]]:
            j += 1
        ranks[order[i:j]] = rank
        rank += j - i
        i = j
    n_tied_first = int((ranks == 1).sum())
    return RankTable(tuple(ids), p, ranks, n_tied_first)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def roc(scores: np.ndarray, truth: np.ndarray) -> RocCurve:
    """Threshold-sweep ROC with tied scores grouped into single vertices.

    Trapezoidal AUC; equals the rank-sum statistic with half weight on
    cross-class ties.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(truth).astype(int)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError("scores and truth must be equal-length vectors")
    P = int(y.sum())
    N = len(y) - P
    if P == 0 or N == 0:
        raise DataError("both classes must be present to sweep a ROC curve")
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    fpr = [0.0]
    tpr = [0.0]
    tp = fp = 0
    i = 0
    while i < len(y_sorted):
        j = i
        while j < len(y_sorted) and s_sorted[j] == s_sorted[i]:
            j += 1
        tp += int(y_sorted[i:j].sum())
        fp += j - i - int(y_sorted[i:j].sum())
        fpr.append(fp / N)
        tpr.append(tp / P)
        i = j
    fpr_arr = np.array(fpr)
    tpr_arr = np.array(tpr)
    auc = float(np.trapezoid(tpr_arr, fpr_arr))
    return RocCurve(fpr_arr, tpr_arr, auc)


DEFAULT_FPR_GRID = np.linspace(0.0, 1.0, 101)


def average_roc(curves: Sequence[RocCurve], fpr_grid: np.ndarray | None = None) -> RocCurve:
    """Vertical averaging: mean TPR at each grid FPR across curves."""
    if not curves:
        raise DataError("need at least one curve to average")
    grid = DEFAULT_FPR_GRID if fpr_grid is None else np.asarray(fpr_grid, dtype=float)
    tprs = []
    for c in curves:
        # collapse duplicate FPR values to their max TPR so interpolation
        # sees a function (vertical segments become their upper endpoint)
        fpr_unique, idx = np.unique(c.fpr, return_index=True)
        tpr_max = np.maximum.reduceat(c.tpr, idx)
        # reduceat spans to the next unique value, which by monotonicity
        # is the max of each run already; interpolate on the grid
        tprs.append(np.interp(grid, fpr_unique, tpr_max))
    mean_tpr = np.mean(tprs, axis=0)
    auc = float(np.trapezoid(mean_tpr, grid))
    return RocCurve(grid.copy(), mean_tpr, auc)
