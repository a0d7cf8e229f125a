"""Synthetic datasets drawn from the generative model, with known truth."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import STATE_ORDER, Roster, n_dyads
from .model import ErrorPriors, ErrorRates, GraphPrior, build_error_priors, graph_prior_probs
from .sampler import sample_dirichlet

_STATES = np.array(STATE_ORDER, dtype=np.int8)


@dataclass(frozen=True)
class SimulationSpec:
    """Either ``rates`` or both ``rho`` and ``gamma`` must be given."""

    n_vertices: int
    n_informants: int
    lam: float
    rates: ErrorRates | None = None
    rho: float | None = None
    gamma: float | None = None
    missing_rate: float = 0.0
    seed: int = 0
    labels: tuple | None = field(default=None)

    def __post_init__(self):
        if self.n_vertices < 2:
            raise ValueError("need at least 2 vertices")
        if self.n_informants < 1:
            raise ValueError("need at least 1 informant")
        GraphPrior(self.lam)
        if not 0 <= self.missing_rate < 1:
            raise ValueError(f"missing_rate must lie in [0, 1), got {self.missing_rate}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        has_rates = self.rates is not None
        has_prior = self.rho is not None or self.gamma is not None
        if has_rates == has_prior:
            raise ValueError("give either explicit rates or (rho, gamma), not both or neither")
        if has_rates and self.rates.n_informants != self.n_informants:
            raise ValueError(
                f"rates cover {self.rates.n_informants} informants, spec has {self.n_informants}"
            )
        if has_prior:
            if self.rho is None or self.gamma is None:
                raise ValueError("rho and gamma must be given together")
            build_error_priors(self.rho, self.gamma, self.n_informants)
        if self.labels is not None and len(self.labels) != self.n_vertices:
            raise ValueError(f"{len(self.labels)} labels for {self.n_vertices} vertices")

    @property
    def roster(self) -> Roster:
        if self.labels is None:
            return Roster.of_size(self.n_vertices)
        return Roster(self.labels)


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    roster: Roster
    truth: np.ndarray
    true_rates: ErrorRates
    reports: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        d = self.roster.n_dyads
        m = self.true_rates.n_informants
        if self.truth.shape != (d,):
            raise ValueError(f"truth has shape {self.truth.shape}, expected ({d},)")
        if self.reports.shape != (m, d) or self.mask.shape != (m, d):
            raise ValueError("reports and mask must both have shape (M, D)")


def simulate_reports(truth, rates: ErrorRates, missing_rate: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Noisy reports of ``truth`` by each informant, plus an MCAR inclusion mask.

    A falsely decisive report on a tied dyad picks its winner uniformly, so
    each direction has probability ``omega / 2``. Masked cells keep their
    generated value; only the mask hides them.
    """
    truth = np.asarray(truth, dtype=np.int8)
    m, d = rates.n_informants, truth.shape[0]
    u = rng.random((m, d))
    phi = rates.phi[:, None]
    tau = rates.tau[:, None]
    omega = rates.omega[:, None]
    correct = u < 1 - phi - tau
    reversed_ = ~correct & (u < 1 - tau)
    decisive_report = np.where(correct, truth, np.where(reversed_, -truth, 0))
    tie_report = np.where(u < 1 - omega, 0, np.where(u < 1 - omega / 2, 1, -1))
    reports = np.where(truth != 0, decisive_report, tie_report).astype(np.int8)
    mask = rng.random((m, d)) >= missing_rate
    return reports, mask


def simulate(spec: SimulationSpec) -> SimulatedDataset:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(spec.seed))))
    d = n_dyads(spec.n_vertices)
    cum = np.cumsum(graph_prior_probs(spec.lam))
    u = rng.random(d) * cum[2]
    truth = _STATES[(u >= cum[0]).astype(np.intp) + (u >= cum[1])]
    if spec.rates is not None:
        rates = spec.rates
    else:
        rates = draw_rates(build_error_priors(spec.rho, spec.gamma, spec.n_informants), rng)
    reports, mask = simulate_reports(truth, rates, spec.missing_rate, rng)
    return SimulatedDataset(spec.roster, truth, rates, reports, mask)


def draw_rates(priors: ErrorPriors, rng) -> ErrorRates:
    dec = sample_dirichlet(priors.decisive, rng)
    tie = sample_dirichlet(priors.tie, rng)
    return ErrorRates(dec[:, 0], dec[:, 1], tie[:, 0])
