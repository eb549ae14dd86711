"""Maximum-likelihood fitting of the two-component mixture via EM.

Serves as the frequentist cross-check for the Bayesian fit: on
well-separated data the posterior means and the MLEs should nearly
coincide.  The EM here is deliberately standard: unconstrained M-steps
(no positivity constraint on the mean shift; that constraint is a prior
belief, not a likelihood feature) followed by a post-hoc relabeling so
component 1 is the one shifted upward across the score coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .linalg import NotPositiveDefinite, cholesky, mvn_logpdf_rows
from .types import DataError, GeneTable, MixtureParams

_DEFAULT_RESTART_SEED = 1234559


@dataclass
class EmResult:
    mixture: MixtureParams
    loglik_trace: np.ndarray
    responsibilities: np.ndarray  # per-item Pr(component 1)
    iterations: int
    converged: bool
    ridge_applied: bool = False


@dataclass
class ComparisonReport:
    rows: list  # (name, em_value, posterior_mean, abs_diff)
    max_component_mean_diff: float
    flagged: list

    @property
    def ok(self) -> bool:
        return not self.flagged


def _loglik_parts(scores, pi1, mu0, mu1, s0, s1):
    l0 = np.log1p(-pi1) + mvn_logpdf_rows(scores, mu0, cholesky(s0))
    l1 = np.log(pi1) + mvn_logpdf_rows(scores, mu1, cholesky(s1))
    stacked = np.stack([l0, l1])
    total = logsumexp(stacked, axis=0)
    return total, np.exp(l1 - total)


def _weighted_cov(scores, w, mu, mode, fallback_var):
    wsum = w.sum()
    centered = scores - mu
    cov = (centered * w[:, None]).T @ centered / max(wsum, 1e-12)
    ridge = False
    d = scores.shape[1]
    if wsum < d + 1:
        cov = cov + np.diag(0.1 * fallback_var)
        ridge = True
    if mode == "diagonal":
        cov = np.diag(np.diag(cov))
    for _ in range(3):
        try:
            cholesky(cov)
            break
        except NotPositiveDefinite:
            cov = cov + np.diag(1e-6 * fallback_var + 1e-12)
            ridge = True
    return cov, ridge


def _run_em(scores, pi1, mu0, mu1, s0, s1, mode, tol, max_iter, fallback_var):
    trace = []
    resp = None
    ridge_any = False
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        total, resp = _loglik_parts(scores, pi1, mu0, mu1, s0, s1)
        loglik = float(total.sum())
        trace.append(loglik)
        if len(trace) > 1:
            prev = trace[-2]
            if abs(loglik - prev) < tol * (abs(prev) + 1.0):
                converged = True
                break
        w1 = resp
        w0 = 1.0 - resp
        n1 = w1.sum()
        n0 = w0.sum()
        pi1 = min(max(n1 / len(scores), 1e-10), 1.0 - 1e-10)
        mu0 = (scores * w0[:, None]).sum(axis=0) / max(n0, 1e-12)
        mu1 = (scores * w1[:, None]).sum(axis=0) / max(n1, 1e-12)
        s0, r0 = _weighted_cov(scores, w0, mu0, mode, fallback_var)
        s1, r1 = _weighted_cov(scores, w1, mu1, mode, fallback_var)
        ridge_any = ridge_any or r0 or r1
    return pi1, mu0, mu1, s0, s1, np.array(trace), resp, it, converged, ridge_any


def _moment_init(scores, labels, mode, fallback_var):
    labels = np.asarray(labels, dtype=bool)
    if labels.sum() == 0 or (~labels).sum() == 0:
        raise DataError("degenerate initial split")
    mu0 = scores[~labels].mean(axis=0)
    mu1 = scores[labels].mean(axis=0)
    w = labels.astype(float)
    s0, _ = _weighted_cov(scores, 1.0 - w, mu0, mode, fallback_var)
    s1, _ = _weighted_cov(scores, w, mu1, mode, fallback_var)
    pi1 = min(max(labels.mean(), 0.01), 0.99)
    return pi1, mu0, mu1, s0, s1


def em_fit(
    data: GeneTable,
    covariance_mode: str = "general",
    init: MixtureParams | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    n_restarts: int = 4,
    restart_seed: int = _DEFAULT_RESTART_SEED,
) -> EmResult:
    """Fit the two-component MVN mixture by maximum likelihood.

    Initialization: a 2-means split along the first principal direction,
    plus `n_restarts` random splits; the run with the best final
    log-likelihood wins.  Pass `init` to skip the search entirely.
    """
    if covariance_mode not in ("general", "diagonal"):
        raise DataError(f"unknown covariance_mode {covariance_mode!r}")
    scores = data.scores
    G, d = scores.shape
    if G <= d + 1:
        raise DataError(f"need more than {d + 1} items to fit a {d}-dim mixture")
    fallback_var = scores.var(axis=0, ddof=1)

    starts = []
    if init is not None:
        if init.pi1 is None:
            raise DataError("explicit init requires pi1")
        starts.append(
            (init.pi1, init.mu0.copy(), init.mu1.copy(), init.sigma0.copy(), init.sigma1.copy())
        )
    else:
        centered = scores - scores.mean(axis=0)
        cov = np.cov(scores, rowvar=False, ddof=1)
        vals, vecs = np.linalg.eigh(np.atleast_2d(cov))
        proj = centered @ vecs[:, -1]
        # 1-d 2-means on the projection
        c0, c1 = np.quantile(proj, 0.25), np.quantile(proj, 0.75)
        for _ in range(25):
            assign = np.abs(proj - c1) < np.abs(proj - c0)
            if assign.sum() in (0, G):
                break
            c0n, c1n = proj[~assign].mean(), proj[assign].mean()
            if c0n == c0 and c1n == c1:
                break
            c0, c1 = c0n, c1n
        assign = np.abs(proj - c1) < np.abs(proj - c0)
        if 0 < assign.sum() < G:
            starts.append(_moment_init(scores, assign, covariance_mode, fallback_var))
        rng = np.random.default_rng(restart_seed)
        while len(starts) < 1 + n_restarts:
            frac = rng.uniform(0.05, 0.5)
            labels = rng.random(G) < frac
            if 0 < labels.sum() < G:
                starts.append(_moment_init(scores, labels, covariance_mode, fallback_var))

    best = None
    for start in starts:
        fit = _run_em(scores, *start, covariance_mode, tol, max_iter, fallback_var)
        if best is None or fit[5][-1] > best[5][-1]:
            best = fit
    pi1, mu0, mu1, s0, s1, trace, resp, iters, converged, ridged = best
    _, resp = _loglik_parts(scores, pi1, mu0, mu1, s0, s1)

    # canonicalize: component 1 carries the larger standardized mean sum,
    # so orientation is decided by every coordinate, not the first one
    pooled_sd = np.sqrt((1.0 - pi1) * np.diag(s0) + pi1 * np.diag(s1))
    pooled_sd = np.where(pooled_sd > 0, pooled_sd, 1.0)
    key = float(((mu1 - mu0) / pooled_sd).sum()) > 0.0
    if not key:
        pi1 = 1.0 - pi1
        mu0, mu1 = mu1, mu0
        s0, s1 = s1, s0
        resp = 1.0 - resp
    mixture = MixtureParams(
        mu0=mu0,
        theta=mu1 - mu0,
        sigma0=s0,
        sigma1=s1,
        covariance_mode=covariance_mode,
        pi1=float(pi1),
    )
    return EmResult(
        mixture=mixture,
        loglik_trace=trace,
        responsibilities=resp,
        iterations=iters,
        converged=converged,
        ridge_applied=ridged,
    )


def observed_loglik(data: GeneTable, mixture: MixtureParams) -> float:
    """Direct mixture log-likelihood evaluation (no EM machinery)."""
    if mixture.pi1 is None:
        raise DataError("mixture log-likelihood requires pi1")
    total, _ = _loglik_parts(
        data.scores, mixture.pi1, mixture.mu0, mixture.mu1, mixture.sigma0, mixture.sigma1
    )
    return float(total.sum())


def compare_em_vs_posterior(em: EmResult, bayes) -> ComparisonReport:
    """Tabulate EM point estimates against Bayesian posterior means.

    `bayes` is a MultiChainResult fitted on the same data in the same
    covariance mode.  Component-mean coordinates differing by more than
    0.05 are flagged (report-level, not an error).
    """
    if em.mixture.covariance_mode != bayes.config.covariance_mode:
        raise DataError(
            f"covariance_mode mismatch: EM {em.mixture.covariance_mode!r} vs "
            f"posterior {bayes.config.covariance_mode!r}"
        )
    samples = bayes.pooled_samples()
    post_mu0 = np.mean([s.mu0 for s in samples], axis=0)
    post_mu1 = np.mean([s.mu1 for s in samples], axis=0)
    rows = []
    flagged = []
    max_diff = 0.0
    for j in range(len(post_mu0)):
        for name, em_v, po_v in (
            (f"mu0[{j}]", float(em.mixture.mu0[j]), float(post_mu0[j])),
            (f"mu1[{j}]", float(em.mixture.mu1[j]), float(post_mu1[j])),
        ):
            diff = abs(em_v - po_v)
            rows.append((name, em_v, po_v, diff))
            max_diff = max(max_diff, diff)
            if diff > 0.05:
                flagged.append(name)
    if samples and samples[0].pi1 is not None and em.mixture.pi1 is not None:
        post_pi1 = float(np.mean([s.pi1 for s in samples]))
        rows.append(("pi1", float(em.mixture.pi1), post_pi1, abs(em.mixture.pi1 - post_pi1)))
    return ComparisonReport(rows=rows, max_component_mean_diff=max_diff, flagged=flagged)
