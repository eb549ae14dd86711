"""Full-conditional updates, chain assembly, restart guard, checkpointing."""

import numpy as np
import pytest
from scipy.special import expit

from mrfmix.mrf import build_sweep_plan
from mrfmix.sampler import (
    ADAPT_BATCH,
    SamplerConfig,
    chain_seeds,
    compute_llr,
    init_chain_state,
    load_checkpoint,
    run_chain,
    run_multichain,
    save_checkpoint,
    update_labels,
    update_mu0,
    update_phi,
    update_pi1,
    update_sigma,
    update_theta,
)
from mrfmix.types import (
    ChainState,
    DataError,
    MixtureParams,
    MrfParams,
    NumericalError,
    RngStreams,
    build_prior_spec,
    make_gene_table,
    make_network_set,
)


def _separated_table(seed=0, G=200, d=2, shift=3.0, frac=0.3):
    rng = np.random.default_rng(seed)
    lab = (rng.random(G) < frac).astype(np.int8)
    X = rng.standard_normal((G, d)) + shift * lab[:, None]
    table = make_gene_table([f"g{i}" for i in range(G)], [f"c{j}" for j in range(d)], X)
    return table, lab


def _state_for(table, labels, pi1=0.3, mrf=None, seed=1):
    d = table.d
    return ChainState(
        labels=labels.astype(np.int8),
        mixture=MixtureParams(
            mu0=np.zeros(d),
            theta=np.full(d, 3.0),
            sigma0=np.eye(d),
            sigma1=np.eye(d),
            pi1=None if mrf is not None else pi1,
        ),
        mrf=mrf,
        rng=RngStreams(seed),
        rw_step=np.full((0 if mrf is None else mrf.K) + 1, 0.3),
    )


def test_update_mu0_conditional_moments():
    # against the closed-form conditional: prec = n0 P0 + C^-1, mean = prec^-1 P0 sum(x0)
    table, lab = _separated_table(seed=2)
    state = _state_for(table, lab)
    prior = build_prior_spec(table)
    rng = np.random.default_rng(3)
    draws = np.array([update_mu0(state, table, prior, rng) for _ in range(20_000)])
    mask0 = lab == 0
    n0 = mask0.sum()
    prec = n0 * np.eye(2) + np.diag(1.0 / np.diag(prior.C))
    cov = np.linalg.inv(prec)
    mean = cov @ table.scores[mask0].sum(axis=0)
    se = np.sqrt(np.diag(cov) / len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 5 * se)
    # the exact conditional covariance is diagonal here, so compare with
    # an absolute floor as well as a relative band
    assert np.allclose(np.cov(draws, rowvar=False), cov, rtol=0.05, atol=3e-4)


def test_update_theta_positive_and_centered():
    table, lab = _separated_table(seed=4)
    state = _state_for(table, lab)
    prior = build_prior_spec(table)
    rng = np.random.default_rng(5)
    draws = np.array([update_theta(state, table, prior, rng) for _ in range(5000)])
    assert np.all(draws > 0)
    # separation is strong, truncation barely binds: mean near the
    # untruncated conditional mean
    mask1 = lab == 1
    n1 = mask1.sum()
    prec = n1 * np.eye(2) + np.diag(1.0 / np.diag(prior.C))
    mean = np.linalg.solve(prec, table.scores[mask1].sum(axis=0))
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 0.1)


def test_update_sigma_diagonal_mode_stays_diagonal():
    table, lab = _separated_table(seed=6)
    state = _state_for(table, lab)
    state.mixture.covariance_mode = "diagonal"
    prior = build_prior_spec(table)
    rng = np.random.default_rng(7)
    for component in (0, 1):
        S = update_sigma(state, table, prior, component, rng)
        assert S.shape == (2, 2)
        assert S[0, 1] == 0.0 and S[1, 0] == 0.0
        assert np.all(np.diag(S) > 0)
    with pytest.raises(DataError):
        update_sigma(state, table, prior, 2, rng)


def test_update_pi1_matches_beta_conditional():
    table, lab = _separated_table(seed=8, G=100)
    state = _state_for(table, lab)
    rng = np.random.default_rng(9)
    draws = np.array([update_pi1(state, rng) for _ in range(50_000)])
    a, b = 1.0 + lab.sum(), 1.0 + (1 - lab).sum()
    mean = a / (a + b)
    sd = np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    assert abs(draws.mean() - mean) < 5 * sd / np.sqrt(len(draws))
    assert np.isclose(draws.std(), sd, rtol=0.03)


def test_update_pi1_rejected_under_network_prior():
    table, lab = _separated_table(seed=10, G=50)
    mrf = MrfParams(-1.0, np.array([0.5]))
    state = _state_for(table, lab, mrf=mrf)
    with pytest.raises(DataError):
        update_pi1(state, np.random.default_rng(0))


def test_update_labels_independence_probabilities():
    # empirical per-item label frequency must match expit(logit(pi1) + llr)
    table, lab = _separated_table(seed=11, G=12, shift=1.0)
    state = _state_for(table, lab, pi1=0.4)
    rng = np.random.default_rng(12)
    llr = compute_llr(state.mixture, table.scores)
    want = expit(np.log(0.4 / 0.6) + llr)
    hits = np.zeros(table.G)
    n = 20_000
    for _ in range(n):
        new, plan = update_labels(state, table, None, rng)
        assert plan is None
        hits += new
    freq = hits / n
    se = np.sqrt(want * (1 - want) / n)
    assert np.all(np.abs(freq - want) < 5 * se + 1e-9)


def test_update_labels_blocked_sweep_matches_sequential_reference():
    rng_data = np.random.default_rng(13)
    G = 40
    nets = make_network_set(
        ["a", "b"],
        [
            [(int(rng_data.integers(G)), int(rng_data.integers(G))) for _ in range(60)],
            [(int(rng_data.integers(G)), int(rng_data.integers(G))) for _ in range(30)],
        ],
        G,
    )
    table, lab = _separated_table(seed=14, G=G, shift=1.5)
    mrf = MrfParams(-0.7, np.array([1.1, 0.4]))
    plan = build_sweep_plan(nets)

    for trial in range(5):
        state = _state_for(table, lab, mrf=mrf, seed=20 + trial)
        llr = compute_llr(state.mixture, table.scores)
        # replicate the sweep's uniforms, then walk the color classes by
        # hand with per-site conditionals against the evolving labels
        us = np.random.default_rng(100 + trial).random(G)
        t_ref = state.labels.astype(float).copy()
        for rows in plan.classes:
            for i in rows:
                eta = mrf.gamma + llr[i]
                for k in range(nets.K):
                    nbrs = nets.adjacency[k][i]
                    if nbrs:
                        s = sum(t_ref[j] for j in nbrs)
                        eta += mrf.betas[k] * (2.0 * s - len(nbrs)) / len(nbrs)
                t_ref[i] = 1.0 if us[i] < expit(eta) else 0.0

        class _Fixed:
            def random(self, n):
                return us.copy()

        new, plan_out = update_labels(state, table, nets, _Fixed(), llr=llr, plan=plan)
        assert plan_out is plan
        assert np.array_equal(new.astype(float), t_ref)


def test_update_phi_respects_support_and_fix_beta_zero():
    table, lab = _separated_table(seed=15, G=60)
    nets = make_network_set(["n"], [[(i, i + 1) for i in range(59)]], 60)
    plan = build_sweep_plan(nets)
    F = plan.field_matrix(lab)

    mrf = MrfParams(-0.5, np.array([5.999]))
    state = _state_for(table, lab, mrf=mrf)
    state.rw_step = np.array([0.0, 10.0])  # only beta moves, and by a lot
    rng = np.random.default_rng(16)
    for _ in range(200):
        out = update_phi(state, F, rng)
        assert 0.0 <= out.betas[0] < 6.0

    state2 = _state_for(table, lab, mrf=MrfParams(-0.5, np.array([0.0])))
    rng2 = np.random.default_rng(17)
    moved = False
    for _ in range(100):
        out = update_phi(state2, F, rng2, fix_beta_zero=True)
        assert out.betas[0] == 0.0
        moved = moved or out.gamma != -0.5
        state2.mrf = out
    assert moved  # gamma stays free while betas are clamped


def test_init_chain_state_overdispersed_and_valid():
    table, _ = _separated_table(seed=18, G=120)
    cfg = SamplerConfig(model="smjm", n_chains=3, n_burnin=10, n_keep=10)
    states = [init_chain_state(cfg, table, None, c, 1000 + c) for c in range(3)]
    fracs = sorted(s.labels.mean() for s in states)
    assert fracs[0] < fracs[1] < fracs[2]  # distinct starting quantiles
    for s in states:
        s.validate()
        assert np.all(s.mixture.theta > 0)
        s.mixture.validate()


def test_run_chain_recovers_separated_data():
    table, lab = _separated_table(seed=19, G=150, shift=3.5)
    cfg = SamplerConfig(model="smjm", n_chains=1, n_burnin=300, n_keep=300, seed=3)
    res = run_chain(cfg, table, None, build_prior_spec(table),
                    chain_seed=chain_seeds(3, 1)[0], chain_index=0)
    assert res.n_restarts == 0
    p = res.label_sum / res.n_retained
    match = ((p > 0.5).astype(int) == lab).mean()
    assert match > 0.95
    assert abs(res.traces["pi1"].mean() - lab.mean()) < 0.08
    assert len(res.traces["n1"]) == 300


def test_run_chain_restart_guard_raises_after_exhaustion():
    # nearly coincident scores cannot support a signal component: the
    # sampler must refuse rather than return the absorbing state
    rng = np.random.default_rng(20)
    X = 0.01 * rng.standard_normal((40, 2))
    table = make_gene_table([f"g{i}" for i in range(40)], ["a", "b"], X)
    cfg = SamplerConfig(
        model="smjm", n_chains=1, n_burnin=150, n_keep=50, seed=4, max_restarts=2
    )
    with pytest.raises(NumericalError) as info:
        run_chain(cfg, table, None, build_prior_spec(table),
                  chain_seed=chain_seeds(4, 1)[0], chain_index=0)
    assert "absorbed" in str(info.value)


def test_run_chain_guard_disabled_returns_absorbed_chain():
    rng = np.random.default_rng(21)
    X = 0.01 * rng.standard_normal((40, 2))
    table = make_gene_table([f"g{i}" for i in range(40)], ["a", "b"], X)
    cfg = SamplerConfig(
        model="smjm", n_chains=1, n_burnin=150, n_keep=50, seed=4, max_restarts=0
    )
    res = run_chain(cfg, table, None, build_prior_spec(table),
                    chain_seed=chain_seeds(4, 1)[0], chain_index=0)
    # with the guard off the chain completes; the label trace shows the trap
    assert res.n_restarts == 0
    assert res.traces["n1"].min() in (0.0, 40.0) or res.traces["n1"].min() >= 0


def test_run_chain_resume_matches_unbroken_run():
    table, _ = _separated_table(seed=22, G=80, shift=3.0)
    prior = build_prior_spec(table)
    nets = make_network_set(["n"], [[(i, (i + 1) % 80) for i in range(80)]], 80)
    cfg = SamplerConfig(model="mrf", n_chains=1, n_burnin=120, n_keep=80, seed=5,
                        max_restarts=0)
    cs = chain_seeds(5, 1)[0]

    full = run_chain(cfg, table, nets, prior, chain_seed=cs, chain_index=0)
    # stop inside burn-in at a non-multiple of the adaptation batch
    head = run_chain(cfg, table, nets, prior, chain_seed=cs, chain_index=0,
                     stop_after=ADAPT_BATCH + 7)
    tail = run_chain(cfg, table, nets, prior, chain_seed=cs, chain_index=0,
                     resume_state=head.final_state)
    for name in full.traces:
        assert np.array_equal(full.traces[name], tail.traces[name]), name
    assert np.array_equal(full.label_sum, tail.label_sum)
    assert full.retained_accept_rate == tail.retained_accept_rate


def test_checkpoint_roundtrip_preserves_exact_trajectory(tmp_path):
    table, _ = _separated_table(seed=23, G=60, shift=3.0)
    prior = build_prior_spec(table)
    cfg = SamplerConfig(model="smjm", n_chains=1, n_burnin=60, n_keep=40, seed=6,
                        max_restarts=0)
    cs = chain_seeds(6, 1)[0]
    full = run_chain(cfg, table, None, prior, chain_seed=cs, chain_index=0)

    head = run_chain(cfg, table, None, prior, chain_seed=cs, chain_index=0,
                     stop_after=30)
    path = str(tmp_path / "chain.ckpt.json")
    save_checkpoint(head.final_state, path)
    restored = load_checkpoint(path)
    tail = run_chain(cfg, table, None, prior, chain_seed=cs, chain_index=0,
                     resume_state=restored)
    for name in full.traces:
        assert np.array_equal(full.traces[name], tail.traces[name]), name

    with pytest.raises(DataError):
        bad = str(tmp_path / "bad.json")
        open(bad, "w").write("{}")
        load_checkpoint(bad)


def test_run_multichain_deterministic_and_pooled():
    table, lab = _separated_table(seed=24, G=100, shift=3.0)
    prior = build_prior_spec(table)
    cfg = SamplerConfig(model="smjm", n_chains=3, n_burnin=100, n_keep=100, seed=7)
    a = run_multichain(cfg, table, None, prior)
    b = run_multichain(cfg, table, None, prior)
    assert np.array_equal(a.p_hat, b.p_hat)
    assert a.n_chains == 3
    assert len(a.pooled_samples()) == 3 * 100
    assert set(a.summary()) == set(a.trace_names)
    # all chains agree on the easy labeling
    match = ((a.p_hat > 0.5).astype(int) == lab).mean()
    assert match > 0.95


def test_run_multichain_validates_networks():
    table, _ = _separated_table(seed=25, G=30)
    cfg = SamplerConfig(model="mrf", n_chains=1, n_burnin=10, n_keep=10)
    with pytest.raises(DataError):
        run_multichain(cfg, table, None, build_prior_spec(table))


def test_chain_seeds_deterministic_and_distinct():
    s1 = chain_seeds(42, 4)
    s2 = chain_seeds(42, 4)
    assert s1 == s2
    assert len(set(s1)) == 4
    assert chain_seeds(43, 4) != s1


def test_sampler_config_validation():
    with pytest.raises(DataError):
        SamplerConfig(model="nope").validate()
    with pytest.raises(DataError):
        SamplerConfig(covariance_mode="sparse").validate()
    with pytest.raises(DataError):
        SamplerConfig(n_keep=0).validate()
    with pytest.raises(DataError):
        SamplerConfig(max_restarts=-1).validate()
