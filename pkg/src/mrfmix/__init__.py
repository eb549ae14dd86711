"""Bayesian mixture models for multi-source score data on networks.

Items carry a vector of evidence scores and an unknown binary state
(background or signal).  The scores follow a two-component multivariate
normal mixture; optionally, one or more undirected networks over the
items enter through an auto-logistic prior on the states, so that items
whose neighbors are signal become more likely to be signal themselves.
Inference is by Gibbs sampling with a random-walk Metropolis step for
the network coefficients, plus an EM fitter for the plain mixture.
"""

from .analysis import (
    CorrelationSummary,
    RankTable,
    RocCurve,
    average_roc,
    posterior_correlations,
    rank_items,
    rhat,
    roc,
)
from .em import ComparisonReport, EmResult, compare_em_vs_posterior, em_fit, observed_loglik
from .io import (
    read_labels,
    read_network_edges,
    read_networks,
    read_scores,
    write_csv,
    write_labels,
    write_manifest,
    write_scores,
)
from .mrf import (
    NeighborStats,
    SweepPlan,
    build_sweep_plan,
    conditional_logit,
    conditional_logits_all,
    log_pseudolikelihood,
    neighbor_stats,
)
from .sampler import (
    ChainResult,
    MultiChainResult,
    SamplerConfig,
    load_checkpoint,
    run_chain,
    run_multichain,
    save_checkpoint,
)
from .simulate import (
    SimulationSpec,
    calibrate_gamma,
    default_networks,
    simulate_dataset,
    simulate_labels,
    simulate_scores,
)
from .types import (
    AlignmentReport,
    ChainState,
    DataError,
    GeneTable,
    MixtureParams,
    MrfParams,
    NetworkSet,
    NumericalError,
    PriorSpec,
    build_prior_spec,
    make_gene_table,
    make_network_set,
    validate_alignment,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "ChainResult",
    "ChainState",
    "ComparisonReport",
    "CorrelationSummary",
    "DataError",
    "EmResult",
    "GeneTable",
    "MixtureParams",
    "MrfParams",
    "MultiChainResult",
    "NeighborStats",
    "NetworkSet",
    "NumericalError",
    "PriorSpec",
    "RankTable",
    "RocCurve",
    "SamplerConfig",
    "SimulationSpec",
    "SweepPlan",
    "average_roc",
    "build_prior_spec",
    "build_sweep_plan",
    "calibrate_gamma",
    "compare_em_vs_posterior",
    "conditional_logit",
    "conditional_logits_all",
    "default_networks",
    "em_fit",
    "load_checkpoint",
    "log_pseudolikelihood",
    "make_gene_table",
    "make_network_set",
    "neighbor_stats",
    "observed_loglik",
    "posterior_correlations",
    "rank_items",
    "read_labels",
    "read_network_edges",
    "read_networks",
    "read_scores",
    "rhat",
    "roc",
    "run_chain",
    "run_multichain",
    "save_checkpoint",
    "simulate_dataset",
    "simulate_labels",
    "simulate_scores",
    "validate_alignment",
    "write_csv",
    "write_labels",
    "write_manifest",
    "write_scores",
    "__version__",
]
