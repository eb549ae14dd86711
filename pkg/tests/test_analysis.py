"""Convergence diagnostics, ranking, and ROC/AUC behavior."""

import numpy as np
import pytest

from mrfmix.analysis import (
    average_roc,
    posterior_correlations,
    rank_items,
    rhat,
    roc,
)
from mrfmix.types import DataError


def test_rhat_near_one_for_iid_chains():
    rng = np.random.default_rng(0)
    chains = [rng.standard_normal(5000) for _ in range(3)]
    r = rhat(chains)
    assert 0.99 < r < 1.01


def test_rhat_flags_disjoint_chains():
    rng = np.random.default_rng(1)
    chains = [rng.standard_normal(500), rng.standard_normal(500) + 5.0]
    assert rhat(chains) > 2.0


def test_rhat_conventions_and_validation():
    flat = [np.ones(100), np.ones(100)]
    assert rhat(flat) == 1.0
    # zero within-chain variance but separated means
    split = [np.ones(100), np.zeros(100)]
    assert rhat(split) == np.inf
    with pytest.raises(DataError):
        rhat([np.ones(100)])
    with pytest.raises(DataError):
        rhat([np.ones(5), np.ones(5)])
    # unequal lengths truncate to the shortest
    rng = np.random.default_rng(2)
    r = rhat([rng.standard_normal(200), rng.standard_normal(150)])
    assert np.isfinite(r)


def test_rhat_against_direct_formula():
    rng = np.random.default_rng(3)
    chains = [rng.standard_normal(40) + i * 0.3 for i in range(4)]
    n = 40
    means = np.array([c.mean() for c in chains])
    W = np.mean([c.var(ddof=1) for c in chains])
    B_over_n = means.var(ddof=1)
    expected = np.sqrt(((n - 1) / n * W + B_over_n) / W)
    assert np.isclose(rhat(chains), expected, atol=1e-12)


def test_posterior_correlations_recover_fixed_matrix():
    corr_true = np.array([[1.0, 0.475], [0.475, 1.0]])
    sd = np.array([2.0, 0.5])
    cov = corr_true * np.outer(sd, sd)
    rng = np.random.default_rng(4)
    # jittered scale draws keep the correlation exact
    draws = [cov * float(rng.uniform(0.5, 2.0)) for _ in range(500)]
    summary = posterior_correlations(draws, labels=("B", "S"))
    assert np.allclose(summary.mean, corr_true, atol=1e-12)
    assert np.allclose(summary.lo[0, 1], 0.475, atol=1e-12)
    assert summary.labels == ("B", "S")
    with pytest.raises(DataError):
        posterior_correlations(draws[:50])


def test_rank_items_competition_ties():
    table = rank_items(["a", "b", "c", "d"], np.array([0.9, 0.5, 0.9, 0.1]))
    by_id = dict(zip(table.ids, table.ranks))
    assert by_id == {"a": 1, "c": 1, "b": 3, "d": 4}
    assert table.n_tied_first == 2
    rows = list(table.rows())
    assert rows[0][0] in ("a", "c")
    assert rows[-1] == ("d", 0.1, 4)
    with pytest.raises(DataError):
        rank_items(["a"], np.array([1.5]))


def test_roc_perfect_and_reverse():
    truth = np.array([0, 0, 1, 1])
    perfect = roc(np.array([0.1, 0.2, 0.8, 0.9]), truth)
    assert perfect.auc == 1.0
    reverse = roc(np.array([0.9, 0.8, 0.2, 0.1]), truth)
    assert reverse.auc == 0.0


def test_roc_equals_rank_sum_statistic():
    # trapezoidal AUC must equal the Mann-Whitney U probability with
    # half-credit ties
    rng = np.random.default_rng(5)
    truth = (rng.random(200) < 0.3).astype(int)
    scores = np.round(rng.standard_normal(200) + truth, 1)  # force ties
    pos = scores[truth == 1]
    neg = scores[truth == 0]
    gt = (pos[:, None] > neg[None, :]).sum()
    eq = (pos[:, None] == neg[None, :]).sum()
    u_stat = (gt + 0.5 * eq) / (len(pos) * len(neg))
    assert np.isclose(roc(scores, truth).auc, u_stat, atol=1e-12)


def test_roc_requires_both_classes():
    with pytest.raises(DataError):
        roc(np.array([0.1, 0.2]), np.array([1, 1]))
    with pytest.raises(DataError):
        roc(np.array([0.1, 0.2]), np.array([0, 1, 1]))


def test_roc_curve_is_monotone():
    rng = np.random.default_rng(6)
    truth = (rng.random(300) < 0.2).astype(int)
    c = roc(rng.standard_normal(300), truth)
    assert np.all(np.diff(c.fpr) >= 0)
    assert np.all(np.diff(c.tpr) >= 0)
    assert c.fpr[0] == 0.0 and c.fpr[-1] == 1.0
    assert c.tpr[0] == 0.0 and c.tpr[-1] == 1.0


def test_average_roc_of_identical_curves_is_identity():
    rng = np.random.default_rng(7)
    truth = (rng.random(400) < 0.3).astype(int)
    c = roc(rng.standard_normal(400) + 2.0 * truth, truth)
    avg = average_roc([c, c, c])
    # vertical averaging on a fine grid reproduces the curve's AUC closely
    assert abs(avg.auc - c.auc) < 0.01
    assert np.all(np.diff(avg.tpr) >= -1e-12)


def test_average_roc_lies_between_inputs():
    rng = np.random.default_rng(8)
    truth = (rng.random(500) < 0.3).astype(int)
    strong = roc(rng.standard_normal(500) + 2.5 * truth, truth)
    weak = roc(rng.standard_normal(500) + 0.3 * truth, truth)
    avg = average_roc([strong, weak])
    assert weak.auc < avg.auc < strong.auc
    with pytest.raises(DataError):
        average_roc([])
