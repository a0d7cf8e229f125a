"""Posterior summaries and convergence checks for retained Gibbs draws."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import STATE_ORDER, state_index
from .sampler import ChainTrace

RATE_NAMES = ("phi", "tau", "omega")
QUANTILES = (0.025, 0.5, 0.975)


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Pooled posterior summaries.

    ``marginals`` is ``(D, 3)`` in ``STATE_ORDER``; ``rate_mean`` is ``(M, 3)``
    and ``rate_quantiles`` ``(M, 3, 3)`` (informant, rate, quantile), both over
    ``RATE_NAMES``. ``rhat`` is ``(M, 3)``; entries are NaN when a split half
    would hold fewer than two draws.
    """

    marginals: np.ndarray
    map_graph: np.ndarray
    rate_mean: np.ndarray
    rate_quantiles: np.ndarray
    rhat: np.ndarray
    n_retained: int


def _check_chains(chains: Sequence[ChainTrace], min_chains: int = 1):
    if len(chains) < min_chains:
        raise ValueError(f"need at least {min_chains} chain(s), got {len(chains)}")
    if any(len(c) == 0 for c in chains):
        raise ValueError("empty chain")
    shapes = {(c.n_dyads, c.n_informants) for c in chains}
    if len(shapes) != 1:
        raise ValueError("chains disagree on the number of dyads or informants")


def state_frequencies(xi: np.ndarray) -> np.ndarray:
    """(D, 3) empirical frequencies of each state over the rows of ``xi``."""
    idx = state_index(xi)
    n, d = idx.shape
    counts = np.zeros((d, 3))
    for si in range(3):
        counts[:, si] = (idx == si).sum(axis=0)
    return counts / n


def map_states(marginals: np.ndarray) -> np.ndarray:
    """Per-dyad argmax; exact ties resolve in ``STATE_ORDER`` (+1, -1, 0)."""
    return np.array(STATE_ORDER, dtype=np.int8)[np.argmax(marginals, axis=1)]


def rhat(draws, split: bool = True) -> float:
    """Potential scale reduction factor for one scalar.

    ``draws`` is ``(n_chains, n_draws)``. With ``split`` each chain is cut into
    a first and last half (the middle draw of an odd-length chain is dropped).
    Zero within-chain variance returns 1 if the chains also agree, else inf.
    Values are floored at 1.
    """
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim != 2:
        raise ValueError(f"draws must be (n_chains, n_draws), got shape {draws.shape}")
    if split:
        half = draws.shape[1] // 2
        draws = np.concatenate([draws[:, :half], draws[:, draws.shape[1] - half:]])
    n_chains, n = draws.shape
    if n < 2 or n_chains < 2:
        return float("nan")
    within = draws.var(axis=1, ddof=1).mean()
    between = n * draws.mean(axis=1).var(ddof=1)
    if within == 0:
        return 1.0 if between == 0 else float("inf")
    pooled = (n - 1) / n * within + between / n
    return max(1.0, float(np.sqrt(pooled / within)))


def summarize(chains: Sequence[ChainTrace], split_rhat: bool = True) -> PosteriorSummary:
    _check_chains(chains)
    xi = np.concatenate([c.xi for c in chains])
    rates = np.concatenate([c.rates for c in chains])
    marginals = state_frequencies(xi)
    m = rates.shape[1]
    rhats = np.full((m, 3), np.nan)
    lengths = {len(c) for c in chains}
    if len(lengths) == 1:
        stacked = np.stack([c.rates for c in chains])  # (chains, n, M, 3)
        for k in range(m):
            for r in range(3):
                rhats[k, r] = rhat(stacked[:, :, k, r], split=split_rhat)
    quantiles = np.quantile(rates, QUANTILES, axis=0)  # (3 quantiles, M, 3)
    return PosteriorSummary(
        marginals=marginals,
        map_graph=map_states(marginals),
        rate_mean=rates.mean(axis=0),
        rate_quantiles=np.moveaxis(quantiles, 0, -1),
        rhat=rhats,
        n_retained=xi.shape[0],
    )


def dyad_agreement(chains: Sequence[ChainTrace]) -> np.ndarray:
    """1 minus the largest total-variation distance of any chain from the pool."""
    _check_chains(chains, min_chains=2)
    pooled = state_frequencies(np.concatenate([c.xi for c in chains]))
    tv = np.stack([0.5 * np.abs(state_frequencies(c.xi) - pooled).sum(axis=1) for c in chains])
    return 1.0 - tv.max(axis=0)
