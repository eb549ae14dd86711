"""Auto-logistic random-field terms over multiple networks.

Each item i sees, per network k, the normalized neighbor-label field
f_ik = (n1 - n0) / m  (0 for singletons), and its conditional log-odds
of carrying label 1 is gamma + sum_k beta_k * f_ik.  The product of
these conditionals is the pseudolikelihood used in place of the
intractable joint normalizing constant.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .types import DataError, MrfParams, NetworkSet


class NeighborStats:
    """Per-item, per-network neighbor label counts with O(deg) flip updates.

    Counts live in plain nested lists: the sequential label sweep reads
    and writes single entries far too often for numpy indexing to pay
    off at these graph sizes.
    """

    def __init__(self, labels: np.ndarray, nets: NetworkSet):
        G = len(labels)
        if nets.G != G:
            raise DataError(f"labels length {G} but networks cover {nets.G} items")
        lab = [int(t) for t in labels]
        self.nets = nets
        self.m = [[len(adj[i]) for i in range(G)] for adj in nets.adjacency]
        self.n1 = [
            [sum(lab[j] for j in adj[i]) for i in range(G)] for adj in nets.adjacency
        ]

    @property
    def G(self) -> int:
        return len(self.m[0]) if self.m else 0

    @property
    def K(self) -> int:
        return len(self.m)

    def n0(self, i: int, k: int) -> int:
        return self.m[k][i] - self.n1[k][i]

    def f(self, i: int, k: int) -> float:
        m = self.m[k][i]
        if m == 0:
            return 0.0
        return (2 * self.n1[k][i] - m) / m

    def apply_flip(self, i: int, new_label: int, old_label: int) -> None:
        """Propagate a single label change at item i to its neighbors."""
        delta = new_label - old_label
        if delta == 0:
            return
        for k, adj in enumerate(self.nets.adjacency):
            row = self.n1[k]
            for j in adj[i]:
                row[j] += delta

    def field_matrix(self) -> np.ndarray:
        """G x K matrix of f_ik values (vectorized consumers)."""
        G, K = self.G, self.K
        F = np.zeros((G, K))
        for k in range(K):
            m = np.array(self.m[k], dtype=float)
            n1 = np.array(self.n1[k], dtype=float)
            np.divide(2.0 * n1 - m, m, out=F[:, k], where=m > 0)
        return F


def neighbor_stats(labels: np.ndarray, nets: NetworkSet) -> NeighborStats:
    return NeighborStats(labels, nets)


def _greedy_coloring(nets: NetworkSet) -> list[int]:
    """Color the union graph greedily in node order (deterministic)."""
    G = nets.G
    union: list[set] = [set() for _ in range(G)]
    for adj in nets.adjacency:
        for i in range(G):
            union[i].update(adj[i])
    color = [-1] * G
    for i in range(G):
        used = {color[j] for j in union[i] if color[j] >= 0}
        c = 0
        while c in used:
            c += 1
        color[i] = c
    return color


def _adjacency_csr(adj, G: int) -> sparse.csr_matrix:
    indptr = np.zeros(G + 1, dtype=np.int64)
    for i in range(G):
        indptr[i + 1] = indptr[i] + len(adj[i])
    indices = np.fromiter(
        (j for i in range(G) for j in adj[i]), dtype=np.int64, count=int(indptr[-1])
    )
    data = np.ones(len(indices), dtype=np.float64)
    return sparse.csr_matrix((data, indices, indptr), shape=(G, G))


class SweepPlan:
    """Chromatic decomposition of the union graph for blocked label sweeps.

    No two nodes in one color class share an edge in any network, so
    their label conditionals are mutually independent given the rest of
    the vector; a sweep can update an entire class with one vectorized
    Bernoulli draw and still target the same stationary law as the
    site-by-site scan.  Row blocks of each adjacency matrix are sliced
    out once so the neighbor-count gather is a sparse matmul.

    Everything here is a function of topology alone; one plan is shared
    across sweeps, chains, and restarts.
    """

    def __init__(self, nets: NetworkSet):
        G, K = nets.G, nets.K
        self.G = G
        self.K = K
        color = _greedy_coloring(nets)
        n_colors = max(color) + 1 if G else 0
        self.classes = [
            np.flatnonzero(np.asarray(color) == c) for c in range(n_colors)
        ]
        self.csr = [_adjacency_csr(adj, G) for adj in nets.adjacency]
        deg = np.zeros((G, K))
        for k, adj in enumerate(nets.adjacency):
            deg[:, k] = [len(adj[i]) for i in range(G)]
        self.deg = deg
        inv = np.zeros_like(deg)
        np.divide(1.0, deg, out=inv, where=deg > 0)
        self.inv_deg = inv
        self.blocks = [[self.csr[k][rows, :] for k in range(K)] for rows in self.classes]
        self.class_deg = [deg[rows, :] for rows in self.classes]
        self.class_inv_deg = [inv[rows, :] for rows in self.classes]

    def field_matrix(self, t: np.ndarray) -> np.ndarray:
        """G x K matrix of f_ik under the 0/1 label vector t."""
        tt = np.asarray(t, dtype=np.float64)
        F = np.empty((self.G, self.K))
        for k in range(self.K):
            n1 = self.csr[k] @ tt
            F[:, k] = (2.0 * n1 - self.deg[:, k]) * self.inv_deg[:, k]
        return F


def build_sweep_plan(nets: NetworkSet) -> SweepPlan:
    return SweepPlan(nets)


def conditional_logit(i: int, stats: NeighborStats, phi: MrfParams) -> float:
    eta = phi.gamma
    for k in range(stats.K):
        eta += float(phi.betas[k]) * stats.f(i, k)
    return eta


def _softplus(eta: np.ndarray) -> np.ndarray:
    # log(1 + e^eta) without overflow for large |eta|
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def conditional_logits_all(stats: NeighborStats, phi: MrfParams) -> np.ndarray:
    F = stats.field_matrix()
    return phi.gamma + F @ np.asarray(phi.betas, dtype=float)


def log_pseudolikelihood_field(labels: np.ndarray, F: np.ndarray, phi: MrfParams) -> float:
    """Pseudolikelihood evaluated from a precomputed field matrix.

    Lets a Metropolis step score several Phi values against one set of
    neighbor statistics without recomputing the fields.
    """
    eta = phi.gamma + F @ np.asarray(phi.betas, dtype=float)
    t = np.asarray(labels, dtype=float)
    return float(t @ eta - _softplus(eta).sum())


def log_pseudolikelihood(labels: np.ndarray, nets: NetworkSet, phi: MrfParams) -> float:
    """Sum over items of T_i * eta_i - log(1 + exp(eta_i)) with eta the conditional logit."""
    stats = NeighborStats(labels, nets)
    return log_pseudolikelihood_field(labels, stats.field_matrix(), phi)
