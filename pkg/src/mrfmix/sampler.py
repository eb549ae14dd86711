"""MCMC engine: full-conditional updates assembled into chains.

One sweep updates, in fixed order: mu0, theta, sigma0, sigma1, the
label vector (blocked Gibbs over color classes of the union graph),
then pi1 (independence model) or Phi (random-field model, random-walk
Metropolis).  Chains are independent units.

Label initialization follows an overdispersed-quantile scheme: chain c
thresholds the summed standardized scores at one of the quantiles
{0.80, 0.87, 0.95}, giving distinct starting splits; mixture parameters
start at moment estimates within that split.

Vague priors on the component means make the two degenerate labelings
absorbing traps.  Empty signal class: theta is drawn at prior scale,
the density ratio collapses toward -inf, and no move can reassign a
label.  Empty background class: mu0 is drawn at prior scale and the
ratio diverges the other way.  run_chain guards both by restarting a
chain from a fresh derived seed (and a rotated starting quantile)
whenever either class empties, bounded by max_restarts; the trap
states themselves carry negligible posterior mass whenever the data
support a two-component decomposition at all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .linalg import (
    CholFactor,
    cholesky,
    mvn_logpdf_rows,
    sample_beta,
    sample_mvn,
    sample_truncated_mvn_positive,
    sample_wishart,
)
from .mrf import SweepPlan, build_sweep_plan, log_pseudolikelihood_field
from .types import (
    BETA_UPPER,
    ChainState,
    DataError,
    GeneTable,
    MixtureParams,
    MrfParams,
    NetworkSet,
    NumericalError,
    PriorSpec,
    RngStreams,
)

INIT_QUANTILES = (0.80, 0.87, 0.95)
ADAPT_BATCH = 50


@dataclass
class SamplerConfig:
    model: str = "smjm"  # "smjm" | "mrf"
    covariance_mode: str = "general"  # "general" | "diagonal"
    n_chains: int = 3
    n_burnin: int = 5000
    n_keep: int = 10000
    thin: int = 1
    seed: int = 0
    rw_target_accept: float = 0.23
    rw_adapt: bool = True
    rw_step_init: float = 0.3
    fix_beta_zero: bool = False  # clamp all betas to 0 (gamma stays free)
    max_restarts: int = 100  # degenerate-labeling absorption guard; 0 disables

    def validate(self) -> None:
        if self.model not in ("smjm", "mrf"):
            raise DataError(f"unknown model {self.model!r}")
        if self.covariance_mode not in ("general", "diagonal"):
            raise DataError(f"unknown covariance_mode {self.covariance_mode!r}")
        if self.n_chains < 1:
            raise DataError("n_chains must be >= 1")
        if self.n_burnin < 0 or self.n_keep < 1 or self.thin < 1:
            raise DataError("need n_burnin >= 0, n_keep >= 1, thin >= 1")
        if self.max_restarts < 0:
            raise DataError("max_restarts must be >= 0")


@dataclass(frozen=True)
class PosteriorSample:
    """One retained draw of all non-label parameters."""

    iteration: int
    mu0: np.ndarray
    theta: np.ndarray
    sigma0: np.ndarray
    sigma1: np.ndarray
    pi1: Optional[float]
    gamma: Optional[float]
    betas: Optional[np.ndarray]

    @property
    def mu1(self) -> np.ndarray:
        return self.mu0 + self.theta


# ---------------------------------------------------------------------------
# Full-conditional updates.  Each takes the current ChainState plus frozen
# inputs and returns the newly drawn quantity; callers assign it back.


def _sample_mvn_from_precision(
    prec: np.ndarray, b: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw MVN(prec^-1 b, prec^-1) without forming the covariance."""
    chol_prec = cholesky(prec)
    mean = np.linalg.solve(prec, b)
    z = rng.standard_normal(len(b))
    return mean + np.linalg.solve(chol_prec.L.T, z)


def update_mu0(
    state: ChainState, data: GeneTable, prior: PriorSpec, rng: np.random.Generator
) -> np.ndarray:
    """Conjugate draw of the component-0 mean given labels and covariances."""
    mask0 = state.labels == 0
    X0_sum = data.scores[mask0].sum(axis=0)
    n0 = int(mask0.sum())
    p0 = cholesky(state.mixture.sigma0).inverse()
    c_inv = np.diag(1.0 / np.diag(prior.C))
    prec = n0 * p0 + c_inv
    b = p0 @ X0_sum
    return _sample_mvn_from_precision(prec, b, rng)


def update_theta(
    state: ChainState, data: GeneTable, prior: PriorSpec, rng: np.random.Generator
) -> np.ndarray:
    """Positive-orthant truncated conjugate draw of the mean shift."""
    mask1 = state.labels == 1
    resid_sum = (data.scores[mask1] - state.mixture.mu0).sum(axis=0)
    n1 = int(mask1.sum())
    p1 = cholesky(state.mixture.sigma1).inverse()
    c_inv = np.diag(1.0 / np.diag(prior.C))
    prec = n1 * p1 + c_inv
    b = p1 @ resid_sum
    cov = cholesky(prec).inverse()
    mean = cov @ b
    return sample_truncated_mvn_positive(
        mean, cholesky(cov), rng, prev=state.mixture.theta
    )


def update_sigma(
    state: ChainState,
    data: GeneTable,
    prior: PriorSpec,
    component: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Inverse of a Wishart precision draw for component j's covariance.

    General mode: precision ~ W((scatter + rho R)^-1, n_j + rho).
    Diagonal mode: the d=1 restriction applied per coordinate, i.e.
    precision_jj ~ chi2(n_j + rho) / (scatter_jj + rho R_jj).
    """
    if component not in (0, 1):
        raise DataError("component must be 0 or 1")
    mask = state.labels == component
    mu_j = state.mixture.mu0 if component == 0 else state.mixture.mu1
    resid = data.scores[mask] - mu_j
    n_j = int(mask.sum())
    dof = n_j + prior.rho
    if state.mixture.covariance_mode == "diagonal":
        scatter_diag = np.einsum("ij,ij->j", resid, resid)
        scale = 1.0 / (scatter_diag + prior.rho * np.diag(prior.R))
        prec_diag = np.array([rng.chisquare(dof) for _ in range(data.d)]) * scale
        return np.diag(1.0 / prec_diag)
    scatter = resid.T @ resid
    scale = cholesky(scatter + prior.rho * prior.R).inverse()
    prec = sample_wishart(cholesky(scale), dof, rng)
    return cholesky(prec).inverse()


def update_pi1(state: ChainState, rng: np.random.Generator) -> float:
    """Conjugate Beta draw of the signal fraction (independence model only)."""
    if state.mrf is not None:
        raise DataError("pi1 update is undefined when a network prior is active")
    return sample_beta(1.0 + state.n1, 1.0 + state.n0, rng)


def compute_llr(mixture: MixtureParams, scores: np.ndarray) -> np.ndarray:
    """Per-item log density ratio of component 1 to component 0."""
    chol0 = cholesky(mixture.sigma0)
    chol1 = cholesky(mixture.sigma1)
    return mvn_logpdf_rows(scores, mixture.mu1, chol1) - mvn_logpdf_rows(
        scores, mixture.mu0, chol0
    )


def _mrf_label_sweep(
    t: np.ndarray,
    plan: SweepPlan,
    llr: np.ndarray,
    gamma: float,
    betas: np.ndarray,
    us: np.ndarray,
) -> None:
    """One blocked Gibbs pass over the color classes in index order.

    `t` is the float 0/1 label vector, mutated class by class.  Within a
    class no two sites are adjacent in any network, so their conditionals
    are independent given the rest and the class updates as one
    vectorized Bernoulli draw against the pre-drawn uniforms `us`.
    """
    for c, rows in enumerate(plan.classes):
        eta = gamma + llr[rows]
        mk = plan.class_deg[c]
        inv = plan.class_inv_deg[c]
        for k in range(plan.K):
            nb1 = plan.blocks[c][k] @ t
            eta = eta + betas[k] * ((2.0 * nb1 - mk[:, k]) * inv[:, k])
        t[rows] = (us[rows] < expit(eta)).astype(np.float64)


def update_labels(
    state: ChainState,
    data: GeneTable,
    nets: Optional[NetworkSet],
    rng: np.random.Generator,
    llr: Optional[np.ndarray] = None,
    plan: Optional[SweepPlan] = None,
) -> tuple[np.ndarray, Optional[SweepPlan]]:
    """One full label sweep; returns the new labels and the sweep plan.

    Each site draws T_i with odds exp(eta_i) times the component density
    ratio, eta_i the conditional logit (or the constant logit pi1 when
    no network prior is active).  `llr` and `plan` may be supplied to
    reuse work across the sweep's caller; both are recomputed if absent.
    """
    if llr is None:
        llr = compute_llr(state.mixture, data.scores)
    if state.mrf is None:
        if state.mixture.pi1 is None:
            raise DataError("independence model requires pi1")
        eta0 = math.log(state.mixture.pi1) - math.log1p(-state.mixture.pi1)
        p1 = expit(eta0 + llr)
        new = (rng.random(len(llr)) < p1).astype(np.int8)
        return new, None
    if plan is None:
        if nets is None:
            raise DataError("network model requires networks")
        plan = build_sweep_plan(nets)
    t = state.labels.astype(np.float64)
    us = rng.random(len(t))
    _mrf_label_sweep(
        t,
        plan,
        np.asarray(llr, dtype=np.float64),
        float(state.mrf.gamma),
        np.asarray(state.mrf.betas, dtype=np.float64),
        us,
    )
    return t.astype(np.int8), plan


def update_phi(
    state: ChainState,
    F: np.ndarray,
    rng: np.random.Generator,
    fix_beta_zero: bool = False,
) -> MrfParams:
    """Joint random-walk Metropolis step on (gamma, betas).

    `F` is the current G x K neighbor-field matrix.  Gaussian proposal
    with diagonal scale state.rw_step; proposals with any beta outside
    [0, BETA_UPPER) are rejected outright (flat prior support).
    Acceptance bookkeeping lands in the state counters; step adaptation
    is the chain driver's job, not this function's.
    """
    phi = state.mrf
    if phi is None:
        raise DataError("no random-field parameters in this state")
    K = phi.K
    eps = rng.standard_normal(K + 1) * state.rw_step
    state.propose_count += 1
    gamma_new = phi.gamma + float(eps[0])
    if fix_beta_zero:
        betas_new = np.zeros(K)
    else:
        betas_new = phi.betas + eps[1:]
        if np.any(betas_new < 0.0) or np.any(betas_new >= BETA_UPPER):
            return phi
    labels = state.labels
    pl_cur = log_pseudolikelihood_field(labels, F, phi)
    cand = MrfParams(gamma_new, betas_new)
    pl_new = log_pseudolikelihood_field(labels, F, cand)
    if math.log(max(rng.random(), 1e-300)) < pl_new - pl_cur:
        state.accept_count += 1
        return cand
    return phi


# ---------------------------------------------------------------------------
# Chain assembly


@dataclass
class ChainResult:
    traces: dict
    samples: list
    label_sum: np.ndarray
    n_retained: int
    retained_accept_rate: Optional[float]
    final_state: ChainState
    n_restarts: int = 0

    @property
    def p_hat(self) -> np.ndarray:
        return self.label_sum / max(self.n_retained, 1)


def trace_names(data: GeneTable, config: SamplerConfig, net_names=()) -> list[str]:
    cols = data.columns
    names = [f"mu0[{c}]" for c in cols] + [f"theta[{c}]" for c in cols]
    names += [f"var0[{c}]" for c in cols] + [f"var1[{c}]" for c in cols]
    if config.covariance_mode == "general":
        for j in range(len(cols)):
            for l in range(j + 1, len(cols)):
                names.append(f"corr0[{cols[j]},{cols[l]}]")
        for j in range(len(cols)):
            for l in range(j + 1, len(cols)):
                names.append(f"corr1[{cols[j]},{cols[l]}]")
    if config.model == "mrf":
        names.append("gamma")
        names += [f"beta[{n}]" for n in net_names]
    else:
        names.append("pi1")
    names.append("n1")
    return names


def _trace_row(state: ChainState, config: SamplerConfig) -> list[float]:
    mix = state.mixture
    d = mix.d
    row = list(mix.mu0) + list(mix.theta)
    row += list(np.diag(mix.sigma0)) + list(np.diag(mix.sigma1))
    if config.covariance_mode == "general":
        for S in (mix.sigma0, mix.sigma1):
            sd = np.sqrt(np.diag(S))
            for j in range(d):
                for l in range(j + 1, d):
                    row.append(S[j, l] / (sd[j] * sd[l]))
    if config.model == "mrf":
        row.append(state.mrf.gamma)
        row += list(state.mrf.betas)
    else:
        row.append(mix.pi1)
    row.append(float(state.n1))
    return row


def init_chain_state(
    config: SamplerConfig,
    data: GeneTable,
    nets: Optional[NetworkSet],
    chain_index: int,
    chain_seed: int,
) -> ChainState:
    """Overdispersed start for chain `chain_index` (see module docstring)."""
    rng = RngStreams(chain_seed)
    q = INIT_QUANTILES[chain_index % len(INIT_QUANTILES)]
    # signal shifts every coordinate upward, so split on the summed
    # standardized score rather than any single column
    col_sd = np.where(data.scores.std(axis=0, ddof=1) > 0, data.scores.std(axis=0, ddof=1), 1.0)
    composite = ((data.scores - data.scores.mean(axis=0)) / col_sd).sum(axis=1)
    cut = np.quantile(composite, q)
    labels = (composite > cut).astype(np.int8)
    if labels.sum() == 0:
        labels[np.argmax(composite)] = 1
    if labels.sum() == len(labels):
        labels[np.argmin(composite)] = 0
    mask1 = labels == 1
    mu0 = data.scores[~mask1].mean(axis=0)
    mu1 = data.scores[mask1].mean(axis=0)
    theta = np.maximum(mu1 - mu0, 0.05 * col_sd)

    def _cov(block: np.ndarray) -> np.ndarray:
        if block.shape[0] < data.d + 2:
            base = np.diag(col_sd**2)
        else:
            base = np.cov(block, rowvar=False, ddof=1) + np.diag(1e-6 * col_sd**2)
        if config.covariance_mode == "diagonal":
            base = np.diag(np.diag(base))
        return np.atleast_2d(base)

    frac = float(labels.mean())
    frac = min(max(frac, 1.0 / len(labels)), 1.0 - 1.0 / len(labels))
    mixture = MixtureParams(
        mu0=mu0,
        theta=theta,
        sigma0=_cov(data.scores[~mask1]),
        sigma1=_cov(data.scores[mask1]),
        covariance_mode=config.covariance_mode,
        pi1=frac if config.model == "smjm" else None,
    )
    mrf = None
    if config.model == "mrf":
        if nets is None or nets.K == 0:
            raise DataError("network model requires at least one network")
        gamma = math.log(frac) - math.log1p(-frac)
        if config.fix_beta_zero:
            betas = np.zeros(nets.K)
        else:
            betas = rng["init"].uniform(0.0, 2.0, size=nets.K)
        mrf = MrfParams(gamma, betas)
    k_phi = (nets.K if nets is not None else 0) + 1
    return ChainState(
        labels=labels,
        mixture=mixture,
        mrf=mrf,
        rng=rng,
        iteration=0,
        rw_step=np.full(k_phi, config.rw_step_init),
        accept_count=0,
        propose_count=0,
    )


def _restart_seed(chain_seed: int, restart: int) -> int:
    ss = np.random.SeedSequence((chain_seed, restart))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_chain(
    config: SamplerConfig,
    data: GeneTable,
    nets: Optional[NetworkSet],
    prior: PriorSpec,
    chain_seed: int = 0,
    chain_index: int = 0,
    resume_state: Optional[ChainState] = None,
    stop_after: Optional[int] = None,
) -> ChainResult:
    """Evolve one chain through burn-in and retention.

    `stop_after` halts after that many total iterations (for
    checkpointing); `resume_state` continues an earlier run.  Retention
    collects every `thin`-th post-burn-in draw plus a running label sum.

    If either label class empties, the chain has entered one of the
    absorbing traps described in the module docstring; the run is
    discarded and the chain restarts from a seed derived from
    (chain_seed, attempt) with a rotated starting quantile.
    NumericalError is raised once config.max_restarts is exhausted.
    """
    config.validate()
    if config.model == "smjm":
        nets = None
    state = resume_state if resume_state is not None else init_chain_state(
        config, data, nets, chain_index, chain_seed
    )
    total = config.n_burnin + config.n_keep
    stop = total if stop_after is None else min(stop_after, total)

    plan = None
    if config.model == "mrf":
        plan = build_sweep_plan(nets)
    names = trace_names(data, config, nets.names if nets is not None else ())
    traces: list[list[float]] = []
    samples: list[PosteriorSample] = []
    label_sum = np.zeros(data.G, dtype=np.int64)
    n_retained = 0
    retained_accepts = 0
    retained_proposes = 0
    restarts = 0

    it = state.iteration
    while it < stop:
        try:
            mix = state.mixture
            mix.mu0 = update_mu0(state, data, prior, state.rng["mu0"])
            mix.theta = update_theta(state, data, prior, state.rng["theta"])
            mix.sigma0 = update_sigma(state, data, prior, 0, state.rng["sigma0"])
            mix.sigma1 = update_sigma(state, data, prior, 1, state.rng["sigma1"])
            llr = compute_llr(mix, data.scores)
            new_labels, plan = update_labels(
                state, data, nets, state.rng["labels"], llr=llr, plan=plan
            )
            state.labels = new_labels
            if config.model == "mrf":
                F = plan.field_matrix(new_labels)
                before = state.propose_count
                acc_before = state.accept_count
                state.mrf = update_phi(
                    state, F, state.rng["mix"], fix_beta_zero=config.fix_beta_zero
                )
                if it >= config.n_burnin:
                    retained_proposes += state.propose_count - before
                    retained_accepts += state.accept_count - acc_before
                elif config.rw_adapt and state.propose_count % ADAPT_BATCH == 0:
                    # Robbins-Monro on the log step, burn-in only; the
                    # 1/sqrt(batch) gain decays slowly enough to cover an
                    # order-of-magnitude scale correction within a
                    # 1000-sweep burn-in (20 batches)
                    batch = state.propose_count // ADAPT_BATCH
                    rate = (state.accept_count - state.adapt_accept_marker) / ADAPT_BATCH
                    state.rw_step = state.rw_step * math.exp(
                        (rate - config.rw_target_accept) / math.sqrt(batch)
                    )
                    state.adapt_accept_marker = state.accept_count
            else:
                mix.pi1 = update_pi1(state, state.rng["mix"])
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}: {exc}") from exc
        if config.max_restarts and (state.n1 == 0 or state.n0 == 0):
            if restarts >= config.max_restarts:
                which = "empty-signal" if state.n1 == 0 else "empty-background"
                raise NumericalError(
                    f"chain {chain_index} absorbed into the {which} state "
                    f"{restarts + 1} times; the data may not support a signal "
                    "component at this separation"
                )
            restarts += 1
            # rotate the init quantile as well as the seed so repeated
            # failures explore different starting basins
            state = init_chain_state(
                config, data, nets, chain_index + restarts,
                _restart_seed(chain_seed, restarts),
            )
            traces.clear()
            samples.clear()
            label_sum[:] = 0
            n_retained = 0
            retained_accepts = 0
            retained_proposes = 0
            it = 0
            continue
        it += 1
        state.iteration = it
        if it > config.n_burnin:
            post = it - config.n_burnin - 1
            label_sum += state.labels
            n_retained_all = post + 1
            if post % config.thin == 0:
                traces.append(_trace_row(state, config))
                samples.append(
                    PosteriorSample(
                        iteration=it,
                        mu0=mix.mu0.copy(),
                        theta=mix.theta.copy(),
                        sigma0=mix.sigma0.copy(),
                        sigma1=mix.sigma1.copy(),
                        pi1=mix.pi1,
                        gamma=state.mrf.gamma if state.mrf else None,
                        betas=state.mrf.betas.copy() if state.mrf else None,
                    )
                )
            n_retained = n_retained_all

    trace_arr = np.array(traces) if traces else np.zeros((0, len(names)))
    accept_rate = None
    if retained_proposes > 0:
        accept_rate = retained_accepts / retained_proposes
    return ChainResult(
        traces={name: trace_arr[:, j] for j, name in enumerate(names)},
        samples=samples,
        label_sum=label_sum,
        n_retained=n_retained,
        retained_accept_rate=accept_rate,
        final_state=state,
        n_restarts=restarts,
    )


@dataclass
class MultiChainResult:
    chains: list
    trace_names: list
    config: SamplerConfig

    @property
    def n_chains(self) -> int:
        return len(self.chains)

    @property
    def p_hat(self) -> np.ndarray:
        total = sum(c.label_sum for c in self.chains)
        n = sum(c.n_retained for c in self.chains)
        return total / max(n, 1)

    def pooled_samples(self) -> list:
        out = []
        for c in self.chains:
            out.extend(c.samples)
        return out

    def trace_group(self, name: str) -> list:
        return [c.traces[name] for c in self.chains]

    def summary(self) -> dict:
        """Pooled posterior mean, sd, and central 95% interval per trace."""
        out = {}
        for name in self.trace_names:
            pooled = np.concatenate([c.traces[name] for c in self.chains])
            out[name] = {
                "mean": float(pooled.mean()),
                "sd": float(pooled.std(ddof=1)) if len(pooled) > 1 else 0.0,
                "q2.5": float(np.quantile(pooled, 0.025)),
                "q97.5": float(np.quantile(pooled, 0.975)),
            }
        return out


def chain_seeds(seed: int, n_chains: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s) for s in ss.generate_state(n_chains, dtype=np.uint64)]


def _chain_task(args) -> ChainResult:
    config, data, nets, prior, seed_c, idx = args
    return run_chain(config, data, nets, prior, chain_seed=seed_c, chain_index=idx)


def run_multichain(
    config: SamplerConfig,
    data: GeneTable,
    nets: Optional[NetworkSet],
    prior: PriorSpec,
    threads: int = 1,
) -> MultiChainResult:
    config.validate()
    if config.model == "mrf" and (nets is None or nets.K == 0):
        raise DataError("network model requires at least one network")
    seeds = chain_seeds(config.seed, config.n_chains)
    tasks = [
        (config, data, nets, prior, seeds[c], c) for c in range(config.n_chains)
    ]
    if threads > 1 and config.n_chains > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=min(threads, config.n_chains)) as ex:
            chains = list(ex.map(_chain_task, tasks))
    else:
        chains = [_chain_task(t) for t in tasks]
    names = trace_names(data, config, nets.names if nets is not None else ())
    return MultiChainResult(chains=chains, trace_names=names, config=config)


# ---------------------------------------------------------------------------
# Checkpointing: versioned JSON snapshot of ChainState for exact resume.

CHECKPOINT_FORMAT = "mrfmix-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(state: ChainState, path: str) -> None:
    mix = state.mixture
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "iteration": state.iteration,
        "labels": [int(t) for t in state.labels],
        "mixture": {
            "mu0": mix.mu0.tolist(),
            "theta": mix.theta.tolist(),
            "sigma0": mix.sigma0.tolist(),
            "sigma1": mix.sigma1.tolist(),
            "covariance_mode": mix.covariance_mode,
            "pi1": mix.pi1,
        },
        "mrf": None
        if state.mrf is None
        else {"gamma": state.mrf.gamma, "betas": state.mrf.betas.tolist()},
        "rw_step": state.rw_step.tolist(),
        "accept_count": state.accept_count,
        "propose_count": state.propose_count,
        "adapt_accept_marker": state.adapt_accept_marker,
        "rng": state.rng.state_dict(),
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str) -> ChainState:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: not a checkpoint file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    m = payload["mixture"]
    mixture = MixtureParams(
        mu0=np.array(m["mu0"]),
        theta=np.array(m["theta"]),
        sigma0=np.array(m["sigma0"]),
        sigma1=np.array(m["sigma1"]),
        covariance_mode=m["covariance_mode"],
        pi1=m["pi1"],
    )
    mrf = None
    if payload["mrf"] is not None:
        mrf = MrfParams(payload["mrf"]["gamma"], np.array(payload["mrf"]["betas"]))
    return ChainState(
        labels=np.array(payload["labels"], dtype=np.int8),
        mixture=mixture,
        mrf=mrf,
        rng=RngStreams.from_state_dict(payload["rng"]),
        iteration=int(payload["iteration"]),
        rw_step=np.array(payload["rw_step"]),
        accept_count=int(payload["accept_count"]),
        propose_count=int(payload["propose_count"]),
        adapt_accept_marker=int(payload["adapt_accept_marker"]),
    )
