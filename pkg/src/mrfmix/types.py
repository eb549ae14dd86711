"""Core domain types shared by every other module.

GeneTable holds the per-item score matrix, NetworkSet the undirected
graphs coupling item labels, and the parameter containers carry the
mixture and random-field state evolved by the samplers.  All types are
plain dataclasses; validation happens in the constructors-by-convention
(`make_*` / `build_*` helpers) so the dataclasses themselves stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

STREAM_NAMES = ("init", "mu0", "theta", "sigma0", "sigma1", "labels", "mix")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(RuntimeError):
    """A numerical operation left its domain (non-PD matrix, overflow)."""


@dataclass(frozen=True)
class GeneTable:
    """Item identifiers plus a G x d matrix of real-valued scores.

    Column order fixes the score-dimension order; `columns` carries the
    header names (e.g. B, E, S).
    """

    ids: tuple[str, ...]
    columns: tuple[str, ...]
    scores: np.ndarray

    @property
    def G(self) -> int:
        return len(self.ids)

    @property
    def d(self) -> int:
        return self.scores.shape[1]

    def select_columns(self, names: Sequence[str]) -> "GeneTable":
        """Project onto a subset of score columns (same items)."""
        idx = [self.columns.index(n) for n in names]
        return GeneTable(self.ids, tuple(names), np.ascontiguousarray(self.scores[:, idx]))


def make_gene_table(ids: Sequence[str], columns: Sequence[str], scores: np.ndarray) -> GeneTable:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2:
        raise DataError("scores must be a 2-d array")
    if len(ids) != scores.shape[0]:
        raise DataError(f"{len(ids)} ids but {scores.shape[0]} score rows")
    if scores.shape[0] < 1 or scores.shape[1] < 1:
        raise DataError("need at least one item and one score column")
    if len(columns) != scores.shape[1]:
        raise DataError(f"{len(columns)} column names but {scores.shape[1]} score columns")
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        dup = next(i for i in ids if i in seen or seen.add(i))  # type: ignore[func-returns-value]
        raise DataError(f"duplicate id {dup!r}")
    if not np.all(np.isfinite(scores)):
        bad = int(np.argwhere(~np.isfinite(scores))[0][0])
        raise DataError(f"non-finite score in row for id {ids[bad]!r}")
    return GeneTable(tuple(ids), tuple(columns), scores)


@dataclass(frozen=True)
class NetworkSet:
    """K undirected networks over the GeneTable index space.

    adjacency[k][i] is a sorted tuple of neighbor indices of item i in
    network k; items absent from a network have an empty tuple there and
    are treated as singletons for that network.
    """

    names: tuple[str, ...]
    adjacency: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def K(self) -> int:
        return len(self.names)

    @property
    def G(self) -> int:
        return len(self.adjacency[0]) if self.adjacency else 0


def make_network_set(
    names: Sequence[str],
    edge_lists: Sequence[Sequence[tuple[int, int]]],
    G: int,
) -> NetworkSet:
    """Build a NetworkSet from per-network edge lists over item indices.

    Symmetrizes, drops self-loops and duplicate edges.
    """
    if len(names) != len(edge_lists):
        raise DataError("one name per network required")
    adj_all = []
    for edges in edge_lists:
        nbrs: list[set[int]] = [set() for _ in range(G)]
        for i, j in edges:
            if i == j:
                continue
            if not (0 <= i < G and 0 <= j < G):
                raise DataError(f"edge ({i},{j}) outside item range 0..{G - 1}")
            nbrs[i].add(j)
            nbrs[j].add(i)
        adj_all.append(tuple(tuple(sorted(s)) for s in nbrs))
    return NetworkSet(tuple(names), tuple(adj_all))


@dataclass
class MixtureParams:
    """Component means and covariances; component 1 is the signal class.

    mu1 is parameterized as mu0 + theta with theta > 0 elementwise so
    that component 1 always carries the larger means.  pi1 is only
    meaningful when no network prior is in play.
    """

    mu0: np.ndarray
    theta: np.ndarray
    sigma0: np.ndarray
    sigma1: np.ndarray
    covariance_mode: str = "general"  # "general" | "diagonal"
    pi1: Optional[float] = None

    @property
    def mu1(self) -> np.ndarray:
        return self.mu0 + self.theta

    @property
    def d(self) -> int:
        return len(self.mu0)

    def validate(self) -> None:
        d = self.d
        for name, arr in (("mu0", self.mu0), ("theta", self.theta)):
            if np.asarray(arr).shape != (d,):
                raise DataError(f"{name} must be a length-{d} vector")
        if not np.all(self.theta > 0):
            raise DataError("theta must be positive elementwise")
        if self.covariance_mode not in ("general", "diagonal"):
            raise DataError(f"unknown covariance_mode {self.covariance_mode!r}")
        for name, S in (("sigma0", self.sigma0), ("sigma1", self.sigma1)):
            S = np.asarray(S)
            if S.shape != (d, d):
                raise DataError(f"{name} must be {d}x{d}")
            if not np.allclose(S, S.T, atol=1e-10):
                raise DataError(f"{name} must be symmetric")
            if self.covariance_mode == "diagonal" and np.any(S[~np.eye(d, dtype=bool)] != 0.0):
                raise DataError(f"{name} must be diagonal in diagonal mode")
            eigmin = float(np.linalg.eigvalsh(S)[0])
            if eigmin <= 0:
                raise DataError(f"{name} not positive definite (min eigenvalue {eigmin:g})")
        if self.pi1 is not None and not (0.0 < self.pi1 < 1.0):
            raise DataError("pi1 must lie in (0,1)")


BETA_UPPER = 6.0


@dataclass
class MrfParams:
    """Random-field intercept gamma and per-network coupling weights."""

    gamma: float
    betas: np.ndarray

    @property
    def K(self) -> int:
        return len(self.betas)

    def validate(self) -> None:
        b = np.asarray(self.betas, dtype=float)
        if b.ndim != 1:
            raise DataError("betas must be a vector")
        if np.any(b < 0.0) or np.any(b >= BETA_UPPER):
            raise DataError(f"betas must lie in [0,{BETA_UPPER})")


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters: mean prior covariance C, covariance anchor R, dof rho."""

    C: np.ndarray
    R: np.ndarray
    rho: int
    beta_upper: float = BETA_UPPER

    @property
    def d(self) -> int:
        return self.R.shape[0]


def build_prior_spec(table: GeneTable) -> PriorSpec:
    """Default hyperparameters derived from the score table.

    R is the raw sample covariance of the full score matrix (denominator
    G-1); C is a vague diag(1e6) on the mean scale; rho equals d so the
    covariance prior stays weakly informative with E(Sigma_j^-1) = R^-1.
    """
    if table.G < 2:
        raise DataError("need at least 2 items to estimate a covariance")
    variances = table.scores.var(axis=0, ddof=1)
    for j, v in enumerate(variances):
        if v <= 0.0:
            raise DataError(f"score column {table.columns[j]!r} has zero variance")
    R = np.cov(table.scores, rowvar=False, ddof=1)
    R = np.atleast_2d(R)
    d = table.d
    return PriorSpec(C=np.diag(np.full(d, 1e6)), R=R, rho=d)


@dataclass(frozen=True)
class AlignmentReport:
    """Per-network overlap between the item universe and network nodes."""

    network_names: tuple[str, ...]
    connected_counts: tuple[int, ...]
    singleton_counts: tuple[int, ...]
    dropped_node_counts: tuple[int, ...]
    dropped_edge_counts: tuple[int, ...]

    def warnings(self) -> list[str]:
        out = []
        for k, name in enumerate(self.network_names):
            if self.dropped_node_counts[k]:
                out.append(
                    f"network {name!r}: {self.dropped_node_counts[k]} node ids not in the "
                    f"score table ({self.dropped_edge_counts[k]} edges dropped)"
                )
        return out


def validate_alignment(table: GeneTable, nets: NetworkSet) -> AlignmentReport:
    """Count connected items and singletons per network.

    Reporting only; dropped-id counts must be recorded at ingestion time
    (see io.read_networks) and re-attached there.  When called on an
    already-projected NetworkSet the dropped counts are zero.
    """
    connected = []
    singleton = []
    for adj in nets.adjacency:
        c = sum(1 for nbrs in adj if nbrs)
        connected.append(c)
        singleton.append(table.G - c)
    zeros = tuple(0 for _ in nets.names)
    return AlignmentReport(nets.names, tuple(connected), tuple(singleton), zeros, zeros)


class RngStreams:
    """Named independent RNG streams derived from one 64-bit seed.

    Each update type draws from its own PCG64 stream so the draw
    sequence of one update cannot perturb another; runs are then
    bit-reproducible given (seed, iteration count) regardless of how
    often any single update consumes randomness.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        children = np.random.SeedSequence(self.seed).spawn(len(STREAM_NAMES))
        self._gens = {
            name: np.random.Generator(np.random.PCG64(ss))
            for name, ss in zip(STREAM_NAMES, children)
        }

    def __getitem__(self, name: str) -> np.random.Generator:
        return self._gens[name]

    def state_dict(self) -> dict:
        out = {}
        for name, gen in self._gens.items():
            st = gen.bit_generator.state
            out[name] = {
                "state": str(st["state"]["state"]),
                "inc": str(st["state"]["inc"]),
                "has_uint32": st["has_uint32"],
                "uinteger": st["uinteger"],
            }
        return {"seed": self.seed, "streams": out}

    @classmethod
    def from_state_dict(cls, payload: dict) -> "RngStreams":
        obj = cls(int(payload["seed"]))
        for name, st in payload["streams"].items():
            obj._gens[name].bit_generator.state = {
                "bit_generator": "PCG64",
                "state": {"state": int(st["state"]), "inc": int(st["inc"])},
                "has_uint32": int(st["has_uint32"]),
                "uinteger": int(st["uinteger"]),
            }
        return obj


@dataclass
class ChainState:
    """Everything one MCMC chain needs to take its next step."""

    labels: np.ndarray  # int8 vector in {0,1}
    mixture: MixtureParams
    mrf: Optional[MrfParams]
    rng: RngStreams
    iteration: int = 0
    rw_step: np.ndarray = field(default_factory=lambda: np.array([0.1]))
    accept_count: int = 0
    propose_count: int = 0
    # accept_count as of the last step-adaptation batch boundary; kept in
    # the state so a resumed chain adapts identically to an unbroken one
    adapt_accept_marker: int = 0

    @property
    def n1(self) -> int:
        return int(self.labels.sum())

    @property
    def n0(self) -> int:
        return len(self.labels) - self.n1

    def validate(self) -> None:
        if not np.isin(self.labels, (0, 1)).all():
            raise DataError("labels must be 0/1")
        if np.any(self.rw_step <= 0):
            raise DataError("rw_step must be positive")
