"""Gibbs sampler for the latent dominance graph and per-informant error rates.

One scan updates, in order: every dyad state (canonical index order) given
the current rates, then every informant's ``(phi, tau)``, then every
``omega``, each from its conjugate full conditional.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .graph import STATE_ORDER, state_index
from .model import (
    COUNT_CATEGORY,
    ErrorPriors,
    ErrorRates,
    GraphPrior,
    SufficientCounts,
    _check_data,
    graph_prior_probs,
)

_STATES = np.array(STATE_ORDER, dtype=np.int8)


@dataclass(frozen=True)
class DyadConditional:
    p_plus: float
    p_minus: float
    p_zero: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus, self.p_zero])


@dataclass(frozen=True)
class ChainState:
    xi: np.ndarray
    rates: ErrorRates
    iteration: int


@dataclass(frozen=True)
class SamplerConfig:
    n_iterations: int
    burn_in: int = 0
    thin: int = 1
    n_chains: int = 1
    seed: int = 0
    clamp_error_rates: ErrorRates | None = None

    def __post_init__(self):
        for name in ("n_iterations", "burn_in", "thin", "n_chains", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be positive")
        if not 0 <= self.burn_in < self.n_iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < n_iterations")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.n_chains < 1:
            raise ValueError("n_chains must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def n_retained(self) -> int:
        return (self.n_iterations - self.burn_in - 1) // self.thin + 1


class ChainTrace(Sequence):
    """Retained states of one chain, stored column-wise.

    Indexing yields :class:`ChainState` objects; ``xi`` is ``(n, D)`` and
    ``rates`` is ``(n, M, 3)`` with columns phi, tau, omega.
    """

    def __init__(self, xi, rates, iterations):
        self.xi = np.asarray(xi, dtype=np.int8)
        self.rates = np.asarray(rates, dtype=np.float64)
        self.iterations = np.asarray(iterations, dtype=np.int64)
        n = self.xi.shape[0]
        if self.rates.shape[0] != n or self.iterations.shape[0] != n:
            raise ValueError("trace arrays disagree on the number of retained states")

    def __len__(self) -> int:
        return self.xi.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return ChainTrace(self.xi[idx], self.rates[idx], self.iterations[idx])
        r = self.rates[idx]
        return ChainState(self.xi[idx], ErrorRates(r[:, 0], r[:, 1], r[:, 2]), int(self.iterations[idx]))

    def __iter__(self) -> Iterator[ChainState]:
        for i in range(len(self)):
            yield self[i]

    @property
    def n_dyads(self) -> int:
        return self.xi.shape[1]

    @property
    def n_informants(self) -> int:
        return self.rates.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ChainTrace):
            return NotImplemented
        return (
            np.array_equal(self.xi, other.xi)
            and np.array_equal(self.rates, other.rates)
            and np.array_equal(self.iterations, other.iterations)
        )


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    """Independent stream for ``chain``, derived from the root seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chain),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_dirichlet(concentrations, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet draw(s) by gamma normalization; the last axis is the simplex.

    Shapes below 1 use ``Gamma(a) = Gamma(a + 1) * U**(1/a)`` in log space so
    tiny concentrations cannot underflow the whole row to zero.
    """
    conc = np.asarray(concentrations, dtype=np.float64)
    if conc.ndim == 0 or conc.shape[-1] < 2:
        raise ValueError("need at least two concentrations")
    if not np.all(np.isfinite(conc)) or np.any(conc <= 0):
        raise ValueError("Dirichlet concentrations must be finite and strictly positive")
    small = conc < 1
    if not small.any():
        g = rng.standard_gamma(conc)
        return g / g.sum(axis=-1, keepdims=True)
    logg = np.log(rng.standard_gamma(conc + small))
    logg += np.where(small, np.log(rng.random(conc.shape)) / conc, 0.0)
    logg -= logg.max(axis=-1, keepdims=True)
    g = np.exp(logg)
    return g / g.sum(axis=-1, keepdims=True)


def decisive_posterior(counts: SufficientCounts, priors: ErrorPriors) -> np.ndarray:
    """(M, 3) concentrations for (phi, tau, 1 - phi - tau) given the counts."""
    return priors.decisive + counts.decisive


def tie_posterior(counts: SufficientCounts, priors: ErrorPriors) -> np.ndarray:
    """(M, 2) concentrations for (omega, 1 - omega) given the counts."""
    return priors.tie + counts.tie


def update_decisive_errors(counts: SufficientCounts, priors: ErrorPriors, rng) -> tuple[np.ndarray, np.ndarray]:
    draw = sample_dirichlet(decisive_posterior(counts, priors), rng)
    return draw[:, 0], draw[:, 1]


def update_tie_errors(counts: SufficientCounts, priors: ErrorPriors, rng) -> np.ndarray:
    return sample_dirichlet(tie_posterior(counts, priors), rng)[:, 0]


# report_weights(rates) == rates @ _WEIGHT_SLOPE + _WEIGHT_INTERCEPT, row-wise
# over the (report, state) cells (+1,+1) (+1,-1) (+1,0) (-1,+1) ... (0,0).
_WEIGHT_SLOPE = np.array([
    # c    phi  omg  phi  c    omg  tau  tau  1-omg
    [-1.0, 1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0],   # phi
    [-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 1.0, 0.0],   # tau
    [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0],    # omega
])
_WEIGHT_INTERCEPT = np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0, 1.0])


def report_weights(rates) -> np.ndarray:
    """(3M, 3) likelihood table: row ``3k + r`` (report), column = true state.

    Branch form of :func:`tiegraph.model.likelihood_table`, laid out for the
    design-matrix product in the scan kernel.
    """
    return (np.asarray(rates) @ _WEIGHT_SLOPE + _WEIGHT_INTERCEPT).reshape(-1, 3)


_RATE_COLS = np.array([0, 1, 3])
_BLOCK_SUMS = np.array([[1.0, 1, 0], [1, 1, 0], [1, 1, 0], [0, 0, 1], [0, 0, 1]])


class _ScanKernel:
    """Precomputed layout of the observed cells for fast repeated scans."""

    def __init__(self, x, z, prior: GraphPrior, priors: ErrorPriors):
        x, z = _check_data(x, z)
        m, d = x.shape
        if priors.n_informants != m:
            raise ValueError(f"{priors.n_informants} prior sets for {m} informants")
        self.m, self.d = m, d
        report_idx = state_index(x)
        obs_k, obs_d = np.nonzero(z)
        obs_r = report_idx[obs_k, obs_d]
        self.obs_k, self.obs_d, self.obs_r = obs_k, obs_d, obs_r
        self.count_offset = obs_k * 5
        # design[d, 3k + r] = 1 when informant k observed report r on dyad d
        design = np.zeros((d, 3 * m))
        design[obs_d, 3 * obs_k + obs_r] = 1.0
        self.design = design
        self.log_prior = np.log(graph_prior_probs(prior))
        self.prior_conc = priors.as_array()
        # counts only add to the shapes, so this is fixed for the whole run
        self.small_prior = bool((self.prior_conc < 1).any())

    def log_masses(self, rates) -> np.ndarray:
        """(D, 3) unnormalized log conditional masses over ``STATE_ORDER``.

        ``rates`` is an (M, 3) array of phi, tau, omega. States ruled out by a
        zero-probability observed report get ``-inf``.
        """
        weights = report_weights(rates)
        zero = weights <= 0
        if zero.any():
            lp = self.design @ np.log(np.where(zero, 1.0, weights)) + self.log_prior
            lp[self.design @ zero > 0] = -np.inf
            return lp
        return self.design @ np.log(weights) + self.log_prior

    def conditionals(self, rates) -> np.ndarray:
        lp = self.log_masses(rates)
        top = lp.max(axis=1, keepdims=True)
        if not np.all(np.isfinite(top)):
            bad = int(np.argmin(np.isfinite(top[:, 0])))
            raise ValueError(f"dyad {bad}: every state has zero conditional mass")
        p = np.exp(lp - top)
        return p / p.sum(axis=1, keepdims=True)

    def draw_states(self, probs: np.ndarray, rng) -> np.ndarray:
        """Inverse-CDF draw per dyad; returns indices into ``STATE_ORDER``."""
        cum = np.cumsum(probs, axis=1)
        u = rng.random(self.d) * cum[:, 2]
        return (u >= cum[:, 0]).astype(np.int8) + (u >= cum[:, 1])

    def draw_rates(self, counts: np.ndarray, rng) -> np.ndarray:
        """(M, 3) draw of phi, tau, omega from their conjugate conditionals.

        The two Dirichlet blocks are independent given the states, so one
        gamma call serves both when no shape is below 1.
        """
        conc = self.prior_conc + counts
        if self.small_prior:
            dec = sample_dirichlet(conc[:, :3], rng)
            tie = sample_dirichlet(conc[:, 3:], rng)
            return np.column_stack([dec[:, 0], dec[:, 1], tie[:, 0]])
        g = rng.standard_gamma(conc)
        return g[:, _RATE_COLS] / (g @ _BLOCK_SUMS)

    def counts(self, state_idx: np.ndarray) -> np.ndarray:
        cat = COUNT_CATEGORY[state_idx[self.obs_d], self.obs_r]
        return np.bincount(self.count_offset + cat, minlength=5 * self.m).reshape(self.m, 5)


def dyad_conditional(x_column, z_column, rates: ErrorRates, prior: GraphPrior) -> DyadConditional:
    """Full conditional of one dyad's state given the rates of all informants."""
    x = np.asarray(x_column).reshape(-1, 1)
    z = np.asarray(z_column).reshape(-1, 1)
    kernel = _ScanKernel(x, z, prior, _flat_priors(x.shape[0]))
    return DyadConditional(*map(float, kernel.conditionals(rates.as_array())[0]))


def _flat_priors(m: int) -> ErrorPriors:
    one = np.ones(m)
    return ErrorPriors(one, one, one, one, one)


def draw_dyad_state(cond: DyadConditional, rng) -> int:
    p = cond.as_array()
    cum = np.cumsum(p)
    u = rng.random() * cum[2]
    return int(STATE_ORDER[int(u >= cum[0]) + int(u >= cum[1])])


def _draw_prior_states(probs: np.ndarray, d: int, rng) -> np.ndarray:
    cum = np.cumsum(probs)
    u = rng.random(d) * cum[2]
    return (u >= cum[0]).astype(np.int8) + (u >= cum[1])


def init_chain(prior: GraphPrior, priors: ErrorPriors, n_dyads: int, rng) -> ChainState:
    """Initial iterate: states from the graph prior, rates from their priors."""
    state_idx = _draw_prior_states(graph_prior_probs(prior), n_dyads, rng)
    dec = sample_dirichlet(priors.decisive, rng)
    tie = sample_dirichlet(priors.tie, rng)
    rates = ErrorRates(dec[:, 0], dec[:, 1], tie[:, 0])
    return ChainState(_STATES[state_idx], rates, 0)


def _run_chain(kernel: _ScanKernel, prior, priors, config: SamplerConfig, chain: int) -> ChainTrace:
    rng = chain_rng(config.seed, chain)
    state = init_chain(prior, priors, kernel.d, rng)
    clamped = config.clamp_error_rates
    current = (clamped if clamped is not None else state.rates).as_array()
    n_keep = config.n_retained
    xi_out = np.empty((n_keep, kernel.d), dtype=np.int8)
    rates_out = np.empty((n_keep, kernel.m, 3))
    iters_out = np.empty(n_keep, dtype=np.int64)
    fixed_probs = kernel.conditionals(current) if clamped is not None else None
    slot = 0
    for it in range(1, config.n_iterations + 1):
        if clamped is None:
            probs = kernel.conditionals(current)
        else:
            probs = fixed_probs
        state_idx = kernel.draw_states(probs, rng)
        if clamped is None:
            current = kernel.draw_rates(kernel.counts(state_idx), rng)
        if it > config.burn_in and (it - config.burn_in - 1) % config.thin == 0:
            xi_out[slot] = _STATES[state_idx]
            rates_out[slot] = current
            iters_out[slot] = it
            slot += 1
    return ChainTrace(xi_out, rates_out, iters_out)


def gibbs_run(x, z, prior: GraphPrior, priors: ErrorPriors, config: SamplerConfig) -> list[ChainTrace]:
    """Run ``config.n_chains`` independent chains and return their retained states.

    Iteration 0 is the prior draw; scans are numbered from 1 and a scan is
    retained when it is past ``burn_in`` and on the thinning stride.
    """
    kernel = _ScanKernel(x, z, prior, priors)
    clamped = config.clamp_error_rates
    if clamped is not None and clamped.n_informants != kernel.m:
        raise ValueError(f"clamped rates cover {clamped.n_informants} informants, data has {kernel.m}")
    return [_run_chain(kernel, prior, priors, config, c) for c in range(config.n_chains)]
