"""Dense numerical primitives for the samplers.

Everything here is small-d (d <= 16): Cholesky factorization, MVN
density and sampling, positive-orthant truncated MVN sampling, and
Wishart sampling via the Bartlett decomposition.  The Cholesky is
hand-rolled so non-PD inputs fail with the offending pivot index
instead of an opaque library error; triangular solves and the rest of
the arithmetic use numpy/scipy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import log_ndtr, ndtri_exp

from .types import DataError, NumericalError

_LOG_2PI = float(np.log(2.0 * np.pi))
_MAX_DIM = 16
_REJECTION_ATTEMPTS = 100


class NotPositiveDefinite(NumericalError):
    """Cholesky pivot failure; `pivot` is the 0-based failing index."""

    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix not positive definite: pivot {pivot} = {value:g}")
        self.pivot = pivot
        self.value = value


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular factor L with L @ L.T equal to the source matrix."""

    L: np.ndarray

    @property
    def d(self) -> int:
        return self.L.shape[0]

    @property
    def log_det_half(self) -> float:
        """log det(Sigma)^(1/2) = sum log L_ii."""
        return float(np.log(np.diag(self.L)).sum())

    def matrix(self) -> np.ndarray:
        return self.L @ self.L.T

    def inverse(self) -> np.ndarray:
        """Sigma^-1 reconstructed from the factor."""
        inv_l = solve_triangular(self.L, np.eye(self.d), lower=True)
        return inv_l.T @ inv_l


def cholesky(A: np.ndarray) -> CholFactor:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError("cholesky requires a square matrix")
    d = A.shape[0]
    if d > _MAX_DIM:
        raise DataError(f"dimension {d} exceeds supported maximum {_MAX_DIM}")
    if not np.allclose(A, A.T, atol=1e-8 * (1.0 + np.abs(A).max())):
        raise DataError("cholesky requires a symmetric matrix")
    L = np.zeros_like(A)
    for j in range(d):
        s = A[j, j] - np.dot(L[j, :j], L[j, :j])
        if s <= 0.0 or not np.isfinite(s):
            raise NotPositiveDefinite(j, float(s))
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, d):
            L[i, j] = (A[i, j] - np.dot(L[i, :j], L[j, :j])) / L[j, j]
    return CholFactor(L)


def mvn_logpdf(x: np.ndarray, mu: np.ndarray, chol: CholFactor) -> float:
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x.shape != mu.shape or x.shape != (chol.d,):
        raise DataError("mvn_logpdf: dimension mismatch")
    z = solve_triangular(chol.L, x - mu, lower=True)
    return -0.5 * chol.d * _LOG_2PI - chol.log_det_half - 0.5 * float(z @ z)


def mvn_logpdf_rows(X: np.ndarray, mu: np.ndarray, chol: CholFactor) -> np.ndarray:
    """Row-wise log density for an (n, d) matrix; one triangular solve."""
    Z = solve_triangular(chol.L, (X - mu).T, lower=True)
    return -0.5 * chol.d * _LOG_2PI - chol.log_det_half - 0.5 * np.einsum("ji,ji->i", Z, Z)


def sample_mvn(mu: np.ndarray, chol: CholFactor, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(chol.d)
    return np.asarray(mu, dtype=float) + chol.L @ z


def truncnorm_lower(mu: float, sigma: float, lo: float, rng: np.random.Generator) -> float:
    """One N(mu, sigma^2) draw conditioned on exceeding lo.

    Inverse-CDF on the survival scale: with alpha the standardized bound,
    x = -ndtri_exp(log(1-u) + log Phi(-alpha)) stays finite arbitrarily
    deep in the tail, where the naive Phi^-1 formulation saturates.
    """
    alpha = (lo - mu) / sigma
    u = rng.random()
    z = -ndtri_exp(np.log1p(-u) + log_ndtr(-alpha))
    return mu + sigma * float(z)


def sample_truncated_mvn_positive(
    mu: np.ndarray,
    chol: CholFactor,
    rng: np.random.Generator,
    prev: np.ndarray | None = None,
) -> np.ndarray:
    """One draw from MVN(mu, Sigma) restricted to the positive orthant.

    Plain rejection for up to 100 attempts (exact and cheap whenever the
    orthant carries appreciable mass), then one coordinate-wise Gibbs
    sweep over univariate truncated-normal full conditionals starting
    from the previous accepted value.  Inside an MCMC sweep the fallback
    is a valid kernel for the same conditional, so the chain's invariant
    distribution is untouched; as a standalone sampler it is approximate
    in the (rare) fallback branch.
    """
    mu = np.asarray(mu, dtype=float)
    d = chol.d
    for _ in range(_REJECTION_ATTEMPTS):
        x = mu + chol.L @ rng.standard_normal(d)
        if np.all(x > 0.0):
            return x
    lam = chol.inverse()
    if prev is not None and np.all(np.asarray(prev) > 0.0):
        x = np.asarray(prev, dtype=float).copy()
    else:
        x = np.where(mu > 0.0, mu, np.sqrt(np.diag(chol.matrix())) * 0.1)
    for i in range(d):
        others = np.delete(np.arange(d), i)
        cond_var = 1.0 / lam[i, i]
        cond_mean = mu[i] - cond_var * float(lam[i, others] @ (x[others] - mu[others]))
        x[i] = truncnorm_lower(cond_mean, np.sqrt(cond_var), 0.0, rng)
    return x


def sample_wishart(scale_chol: CholFactor, dof: float, rng: np.random.Generator) -> np.ndarray:
    """One Wishart draw with the given scale factor and dof; mean dof*scale.

    Bartlett construction: W = (L A)(L A)^T with A lower triangular,
    A_jj = sqrt(chi2_{dof-j}) and subdiagonal standard normals.
    """
    d = scale_chol.d
    if dof < d:
        raise DataError(f"Wishart dof {dof} below dimension {d}")
    A = np.zeros((d, d))
    for j in range(d):
        A[j, j] = np.sqrt(rng.chisquare(dof - j))
        for i in range(j + 1, d):
            A[i, j] = rng.standard_normal()
    LA = scale_chol.L @ A
    return LA @ LA.T


def sample_beta(a: float, b: float, rng: np.random.Generator) -> float:
    if a <= 0.0 or b <= 0.0:
        raise DataError("Beta parameters must be positive")
    x = float(rng.beta(a, b))
    # keep strictly inside (0,1) for downstream logits
    eps = np.finfo(float).tiny
    return min(max(x, eps), 1.0 - 1e-16)
