"""Benchmark data generation: networks, label fields, score draws."""

import numpy as np
import pytest

from mrfmix import simulate
from mrfmix.simulate import (
    SimulationSpec,
    calibrate_gamma,
    default_networks,
    default_score_params,
    make_modular_adjacency,
    simulate_dataset,
    simulate_labels,
    simulate_scores,
)
from mrfmix.types import DataError, MrfParams, make_network_set


def test_default_score_params_shapes_and_pd():
    mu0, mu1, s0, s1 = default_score_params()
    assert mu0.shape == mu1.shape == (3,)
    assert np.all(mu1 > mu0)
    for S in (s0, s1):
        assert np.all(np.linalg.eigvalsh(S) > 0)
    # component-0 scores are independent across sources; the signal
    # component carries the target correlations
    assert np.count_nonzero(s0 - np.diag(np.diag(s0))) == 0
    corr1 = s1 / np.sqrt(np.outer(np.diag(s1), np.diag(s1)))
    assert np.isclose(corr1[0, 2], 0.475, atol=1e-12)


def test_make_modular_adjacency_structure():
    rng = np.random.default_rng(0)
    adj = make_modular_adjacency(
        rng, G=100, n_nodes=60, module_size=15, p_in=0.5, inter_degree=1.0
    )
    assert len(adj) == 100
    degs = np.array([len(a) for a in adj])
    assert (degs > 0).sum() <= 60  # only covered nodes get edges
    assert degs.sum() % 2 == 0  # undirected handshake
    for i, nbrs in enumerate(adj):
        assert i not in nbrs
        for j in nbrs:
            assert i in adj[j]
    with pytest.raises(DataError):
        make_modular_adjacency(rng, G=10, n_nodes=11, module_size=5, p_in=0.5, inter_degree=1.0)


def test_default_networks_two_scales():
    rng = np.random.default_rng(1)
    nets = default_networks(500, rng)
    assert nets.names == ("net1", "net2")
    cov1 = sum(1 for a in nets.adjacency[0] if a)
    cov2 = sum(1 for a in nets.adjacency[1] if a)
    assert cov1 > cov2  # first network covers more of the universe
    assert cov2 > 200  # but the second is wide enough to anchor a fit


def test_calibrate_gamma_edgeless_closed_form():
    nets = make_network_set(["n"], [[]], G=50)
    rng = np.random.default_rng(2)
    g = calibrate_gamma(nets, np.array([1.0]), 0.2, rng)
    assert np.isclose(g, np.log(0.2 / 0.8), atol=1e-12)


def test_calibrate_gamma_hits_target_fraction():
    rng = np.random.default_rng(3)
    nets = default_networks(300, rng)
    betas = np.array([1.06, 0.61])
    g = calibrate_gamma(nets, betas, 0.13, rng)
    # realized fraction under the calibrated field should straddle 13%
    fr = np.mean(
        [
            simulate._gibbs_prior_labels(nets, MrfParams(g, betas), 300, 300, rng).mean()
            for _ in range(6)
        ]
    )
    assert abs(fr - 0.13) < 0.05


def test_simulate_labels_explicit_passthrough():
    lab = np.array([0, 1, 0, 1], dtype=np.int8)
    spec = SimulationSpec(G=4, labels=lab, generate_networks=False)
    out, phi, nets = simulate_labels(spec, np.random.default_rng(0))
    assert np.array_equal(out, lab)
    assert phi is None

    bad = SimulationSpec(G=4, labels=np.array([0, 2, 0, 1]), generate_networks=False)
    with pytest.raises(DataError):
        simulate_labels(bad, np.random.default_rng(0))


def test_simulate_labels_mrf_prior_fraction():
    spec = SimulationSpec(G=400, seed=5)
    labels, phi, nets = simulate_labels(spec, np.random.default_rng(5))
    assert phi is not None and nets is not None
    assert np.isin(labels, (0, 1)).all()
    # calibrated field should land within a few points of the 13% target
    assert 0.05 < labels.mean() < 0.25
    assert np.allclose(phi.betas, (1.06, 0.61))


def test_simulate_scores_components_and_determinism():
    spec = SimulationSpec(G=4000, generate_networks=False)
    lab = (np.random.default_rng(6).random(4000) < 0.5).astype(np.int8)
    t1 = simulate_scores(spec, lab, np.random.default_rng(7))
    t2 = simulate_scores(spec, lab, np.random.default_rng(7))
    assert np.array_equal(t1.scores, t2.scores)
    assert t1.columns == ("B", "E", "S")

    mu0, mu1, s0, s1 = default_score_params()
    X0 = t1.scores[lab == 0]
    X1 = t1.scores[lab == 1]
    assert np.all(np.abs(X0.mean(axis=0) - mu0) < 5 * np.sqrt(np.diag(s0) / len(X0)))
    assert np.all(np.abs(X1.mean(axis=0) - mu1) < 5 * np.sqrt(np.diag(s1) / len(X1)))
    assert np.allclose(np.cov(X1, rowvar=False), s1, atol=0.05)


def test_simulate_dataset_shapes():
    spec = SimulationSpec(G=120, seed=8)
    table, labels = simulate_dataset(spec, np.random.default_rng(8))
    assert table.G == 120
    assert len(labels) == 120
    assert 0 < labels.sum() < 120


def test_spec_validation_errors():
    with pytest.raises(DataError):
        SimulationSpec(G=1).validate()
    with pytest.raises(DataError):
        SimulationSpec(G=10, target_fraction=0.0).validate()
    with pytest.raises(DataError):
        SimulationSpec(G=10, n_targets=10).validate()
    bad_mu = SimulationSpec(G=10, mu0=np.array([1.0, 1.0, 1.0]), mu1=np.array([0.5, 2.0, 14.0]))
    with pytest.raises(DataError):
        bad_mu.validate()
    bad_cov = SimulationSpec(G=10, sigma0=np.zeros((3, 3)))
    with pytest.raises(DataError):
        bad_cov.validate()
    with pytest.raises(DataError):
        SimulationSpec(G=10, n_replicates=0).validate()


def test_n_targets_overrides_fraction():
    spec = SimulationSpec(G=100, n_targets=25, target_fraction=0.9)
    assert spec.fraction == 0.25
