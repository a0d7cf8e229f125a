"""Exact posteriors for small instances, used to validate the sampler.

Two oracles:

* :func:`exact_fixed_error_posterior` -- rates known; dyads are independent,
  so each dyad's posterior is a direct three-term evaluation.
* :func:`collapsed_exact_posterior` -- rates integrated out against their
  Dirichlet priors; enumerates all ``3**D`` graphs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .graph import STATE_ORDER, state_index
from .model import (
    ErrorPriors,
    ErrorRates,
    GraphPrior,
    _check_data,
    dyad_likelihood,
    graph_prior_probs,
    sufficient_counts,
)

DEFAULT_MAX_DYADS = 10


@dataclass(frozen=True, eq=False)
class ExactPosterior:
    """Per-dyad marginals ``(D, 3)`` in ``STATE_ORDER``, optionally the joint.

    ``joint_states`` is ``(3**D, D)`` and ``joint_probs`` its probabilities.
    """

    marginals: np.ndarray
    joint_states: np.ndarray | None = None
    joint_probs: np.ndarray | None = None

    @property
    def n_dyads(self) -> int:
        return self.marginals.shape[0]


class TooManyDyads(ValueError):
    pass


def _all_graphs(d: int) -> np.ndarray:
    return np.array(list(itertools.product(STATE_ORDER, repeat=d)), dtype=np.int8).reshape(-1, d)


def _check_cap(d: int, max_dyads: int):
    if d > max_dyads:
        raise TooManyDyads(
            f"exact enumeration over 3**{d} graphs refused (cap is {max_dyads} dyads)"
        )


def exact_fixed_error_posterior(
    x, z, rates: ErrorRates, prior: GraphPrior, joint: bool = False, max_dyads: int = DEFAULT_MAX_DYADS
) -> ExactPosterior:
    x, z = _check_data(x, z)
    m, d = x.shape
    if rates.n_informants != m:
        raise ValueError(f"{rates.n_informants} rate sets for {m} informants")
    prior_probs = graph_prior_probs(prior)
    marginals = np.empty((d, 3))
    for dyad in range(d):
        masses = []
        for s, p_s in zip(STATE_ORDER, prior_probs):
            factors = (
                dyad_likelihood(int(x[k, dyad]), s, rates.phi[k], rates.tau[k], rates.omega[k])
                for k in range(m)
                if z[k, dyad]
            )
            masses.append(p_s * math.prod(factors))
        psi = sum(masses)
        if psi == 0:
            raise ValueError(f"dyad {dyad}: every state has zero posterior mass")
        marginals[dyad] = [mass / psi for mass in masses]
    if not joint:
        return ExactPosterior(marginals)
    _check_cap(d, max_dyads)
    states = _all_graphs(d)
    idx = state_index(states)
    probs = marginals[np.arange(d), idx].prod(axis=1)
    return ExactPosterior(marginals, states, probs)


def log_dirichlet_norm(conc) -> np.ndarray:
    """log B(a) = sum(lgamma(a)) - lgamma(sum(a)) over the last axis."""
    conc = np.asarray(conc, dtype=np.float64)
    return gammaln(conc).sum(axis=-1) - gammaln(conc.sum(axis=-1))


def _collapsed_from_counts(counts: np.ndarray, priors: ErrorPriors) -> np.ndarray:
    """Sum over informants of the log evidence; ``counts`` is ``(..., M, 5)``."""
    dec = priors.decisive
    tie = priors.tie
    per_informant = (
        log_dirichlet_norm(dec + counts[..., :3])
        - log_dirichlet_norm(dec)
        + log_dirichlet_norm(tie + counts[..., 3:])
        - log_dirichlet_norm(tie)
    )
    return per_informant.sum(axis=-1)


def collapsed_log_marginal_likelihood(x, z, xi, priors: ErrorPriors) -> float:
    """log Pr(reports | graph) with every informant's rates integrated out."""
    x, z = _check_data(x, z)
    if priors.n_informants != x.shape[0]:
        raise ValueError(f"{priors.n_informants} prior sets for {x.shape[0]} informants")
    counts = sufficient_counts(x, z, xi).counts
    return float(_collapsed_from_counts(counts, priors))


def collapsed_exact_posterior(
    x, z, prior: GraphPrior, priors: ErrorPriors, max_dyads: int = DEFAULT_MAX_DYADS
) -> ExactPosterior:
    x, z = _check_data(x, z)
    m, d = x.shape
    _check_cap(d, max_dyads)
    if priors.n_informants != m:
        raise ValueError(f"{priors.n_informants} prior sets for {m} informants")
    # Counts are additive over dyads: tabulate each dyad's contribution per state.
    per_dyad = np.zeros((d, 3, m, 5), dtype=np.int64)
    for dyad in range(d):
        for si, s in enumerate(STATE_ORDER):
            per_dyad[dyad, si] = sufficient_counts(x[:, [dyad]], z[:, [dyad]], [s]).counts
    states = _all_graphs(d)
    idx = state_index(states)
    counts = np.zeros((len(states), m, 5), dtype=np.int64)
    for dyad in range(d):
        counts += per_dyad[dyad, idx[:, dyad]]
    log_prior = np.log(graph_prior_probs(prior))[idx].sum(axis=1)
    log_w = log_prior + _collapsed_from_counts(counts, priors)
    probs = np.exp(log_w - logsumexp(log_w))
    marginals = np.stack(
        [np.bincount(idx[:, dyad], weights=probs, minlength=3) for dyad in range(d)]
    )
    return ExactPosterior(marginals, states, probs)

