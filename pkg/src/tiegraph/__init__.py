"""Joint inference of tournament graphs with ties and informant error rates."""

from .diagnostics import PosteriorSummary, dyad_agreement, rhat, summarize
from .graph import (
    STATE_ORDER,
    DyadIndex,
    Roster,
    adjacency_to_dyads,
    copeland_score,
    dyad_flat,
    dyads_to_adjacency,
    iter_dyads,
    n_dyads,
    report_array_to_matrix,
)
from .model import (
    ErrorPriors,
    ErrorRates,
    GraphPrior,
    SufficientCounts,
    build_error_priors,
    dyad_likelihood,
    graph_prior_probs,
    joint_log_likelihood,
    sufficient_counts,
)
from .oracle import (
    ExactPosterior,
    collapsed_exact_posterior,
    collapsed_log_marginal_likelihood,
    exact_fixed_error_posterior,
)
from .sampler import (
    ChainState,
    ChainTrace,
    DyadConditional,
    SamplerConfig,
    draw_dyad_state,
    dyad_conditional,
    gibbs_run,
    init_chain,
    sample_dirichlet,
    update_decisive_errors,
    update_tie_errors,
)
from .simulate import SimulatedDataset, SimulationSpec, simulate

__version__ = "0.1.0"

__all__ = [
    "ChainState",
    "ChainTrace",
    "DyadConditional",
    "DyadIndex",
    "ErrorPriors",
    "ErrorRates",
    "ExactPosterior",
    "GraphPrior",
    "PosteriorSummary",
    "Roster",
    "STATE_ORDER",
    "SamplerConfig",
    "SimulatedDataset",
    "SimulationSpec",
    "SufficientCounts",
    "adjacency_to_dyads",
    "build_error_priors",
    "collapsed_exact_posterior",
    "collapsed_log_marginal_likelihood",
    "copeland_score",
    "draw_dyad_state",
    "dyad_agreement",
    "dyad_conditional",
    "dyad_flat",
    "dyad_likelihood",
    "dyads_to_adjacency",
    "exact_fixed_error_posterior",
    "gibbs_run",
    "graph_prior_probs",
    "init_chain",
    "iter_dyads",
    "joint_log_likelihood",
    "n_dyads",
    "report_array_to_matrix",
    "rhat",
    "sample_dirichlet",
    "simulate",
    "sufficient_counts",
    "summarize",
    "update_decisive_errors",
    "update_tie_errors",
]
