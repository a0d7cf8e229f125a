"""Likelihood, priors and sufficient statistics of the informant-error model.

Each informant ``k`` has three error rates:

* ``phi``   -- reports the reverse winner of a truly decisive dyad,
* ``tau``   -- reports a tie for a truly decisive dyad,
* ``omega`` -- reports some winner for a truly tied dyad.

``(phi, tau, 1 - phi - tau)`` lies on the 3-simplex with Dirichlet prior
concentrations ``(alpha, beta, gamma)``; ``(omega, 1 - omega)`` lies on the
2-simplex with concentrations ``(delta, epsilon)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import STATE_ORDER, check_states

# Columns of SufficientCounts, aligned with the concentration order
# (alpha, beta, gamma | delta, epsilon).
REVERSED, FALSE_TIE, CORRECT_DECISIVE, FALSE_DECISIVE, CORRECT_TIE = range(5)
COUNT_NAMES = ("n_reversed", "n_false_tie", "n_correct_decisive", "n_false_decisive", "n_correct_tie")


def _as_vector(name, values, m=None):
    arr = np.atleast_1d(np.array(values, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a scalar or 1-D, got shape {arr.shape}")
    if m is not None and arr.shape[0] != m:
        if arr.shape[0] == 1:
            arr = np.repeat(arr, m)
        else:
            raise ValueError(f"{name} has {arr.shape[0]} entries, expected {m}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class ErrorRates:
    """Per-informant error rates, each a length-M float array."""

    phi: np.ndarray
    tau: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        phi = _as_vector("phi", self.phi)
        m = phi.shape[0]
        tau = _as_vector("tau", self.tau, m)
        omega = _as_vector("omega", self.omega, m)
        tol = 1e-12
        if np.any(phi < 0) or np.any(tau < 0) or np.any(phi + tau > 1 + tol):
            raise ValueError("need phi >= 0, tau >= 0 and phi + tau <= 1")
        if np.any(omega < 0) or np.any(omega > 1):
            raise ValueError("need 0 <= omega <= 1")
        for name, arr in (("phi", phi), ("tau", tau), ("omega", omega)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def constant(cls, phi: float, tau: float, omega: float, m: int) -> "ErrorRates":
        return cls(np.full(m, phi), np.full(m, tau), np.full(m, omega))

    @property
    def n_informants(self) -> int:
        return self.phi.shape[0]

    def as_array(self) -> np.ndarray:
        """(M, 3) array with columns phi, tau, omega."""
        return np.column_stack([self.phi, self.tau, self.omega])

    def __eq__(self, other):
        if not isinstance(other, ErrorRates):
            return NotImplemented
        return np.array_equal(self.as_array(), other.as_array())


@dataclass(frozen=True)
class GraphPrior:
    lam: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie strictly inside (0, 1), got {self.lam}")


@dataclass(frozen=True, eq=False)
class ErrorPriors:
    """Dirichlet concentrations per informant (length-M arrays)."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    epsilon: np.ndarray

    def __post_init__(self):
        alpha = _as_vector("alpha", self.alpha)
        m = alpha.shape[0]
        for name in ("alpha", "beta", "gamma", "delta", "epsilon"):
            arr = alpha if name == "alpha" else _as_vector(name, getattr(self, name), m)
            if np.any(arr <= 0):
                raise ValueError(f"concentration {name} must be strictly positive")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_informants(self) -> int:
        return self.alpha.shape[0]

    @property
    def decisive(self) -> np.ndarray:
        """(M, 3): concentrations for (reversed, false tie, correct)."""
        return np.column_stack([self.alpha, self.beta, self.gamma])

    @property
    def tie(self) -> np.ndarray:
        """(M, 2): concentrations for (falsely decisive, correct tie)."""
        return np.column_stack([self.delta, self.epsilon])

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.alpha, self.beta, self.gamma, self.delta, self.epsilon])

    def prior_means(self) -> ErrorRates:
        dec = self.decisive
        tie = self.tie
        dec = dec / dec.sum(axis=1, keepdims=True)
        return ErrorRates(dec[:, 0], dec[:, 1], tie[:, 0] / tie.sum(axis=1))

    def __eq__(self, other):
        if not isinstance(other, ErrorPriors):
            return NotImplemented
        return np.array_equal(self.as_array(), other.as_array())


@dataclass(frozen=True, eq=False)
class SufficientCounts:
    """(M, 5) integer tallies; columns follow ``COUNT_NAMES``."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[1] != 5:
            raise ValueError(f"counts must have shape (M, 5), got {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def n_reversed(self):
        return self.counts[:, REVERSED]

    @property
    def n_false_tie(self):
        return self.counts[:, FALSE_TIE]

    @property
    def n_correct_decisive(self):
        return self.counts[:, CORRECT_DECISIVE]

    @property
    def n_false_decisive(self):
        return self.counts[:, FALSE_DECISIVE]

    @property
    def n_correct_tie(self):
        return self.counts[:, CORRECT_TIE]

    @property
    def decisive(self) -> np.ndarray:
        return self.counts[:, :3]

    @property
    def tie(self) -> np.ndarray:
        return self.counts[:, 3:]

    def __eq__(self, other):
        if not isinstance(other, SufficientCounts):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)


def dyad_likelihood(x, xi, phi, tau, omega):
    """Probability that an informant reports ``x`` when the true state is ``xi``.

    Evaluates the mixture likelihood in its absolute-value form, so it
    broadcasts over arrays of reports, states and rates alike.
    """
    x = np.asarray(x)
    xi = np.asarray(xi)
    if not (np.isin(x, STATE_ORDER).all() and np.isin(xi, STATE_ORDER).all()):
        raise ValueError("report and dyad states must take values in {-1, 0, +1}")
    out = _likelihood(x, xi, phi, tau, omega)
    return out[()] if isinstance(out, np.ndarray) and out.ndim == 0 else out


def _likelihood(x, xi, phi, tau, omega):
    ax = np.abs(x)
    axi = np.abs(xi)
    half_sum = 0.5 * np.abs(xi + x)
    decisive = ax * (1 - half_sum) * phi + (1 - ax) * tau + ax * half_sum * (1 - phi - tau)
    tied = ax * omega + (1 - ax) * (1 - omega)
    return axi * decisive + (1 - axi) * tied


_S = np.array(STATE_ORDER)
_REPORTS = _S[None, None, :]
_TRUTHS = _S[None, :, None]


def likelihood_table(rates) -> np.ndarray:
    """(M, 3, 3) array ``L[k, s, r]`` over states and reports in ``STATE_ORDER``.

    ``rates`` is an :class:`ErrorRates` or an (M, 3) array of phi, tau, omega.
    """
    arr = rates.as_array() if isinstance(rates, ErrorRates) else np.asarray(rates)
    return _likelihood(
        _REPORTS, _TRUTHS, arr[:, 0, None, None], arr[:, 1, None, None], arr[:, 2, None, None]
    )


def _check_data(x, z, d=None):
    x = np.asarray(x)
    z = np.asarray(z)
    if x.ndim != 2:
        raise ValueError(f"report matrix must be 2-D (M, D), got shape {x.shape}")
    if z.shape != x.shape:
        raise ValueError(f"inclusion mask shape {z.shape} does not match reports {x.shape}")
    if not np.isin(z, (0, 1)).all():
        raise ValueError("inclusion mask must be binary")
    if d is not None and x.shape[1] != d:
        raise ValueError(f"reports cover {x.shape[1]} dyads, expected {d}")
    z = z.astype(bool)
    # Unobserved cells are never read; zero them so placeholders cannot leak.
    x = np.where(z, x, 0)
    if not np.isin(x, STATE_ORDER).all():
        raise ValueError("observed reports must take values in {-1, 0, +1}")
    return x.astype(np.int8), z


def joint_log_likelihood(x, z, xi, rates: ErrorRates) -> float:
    x, z = _check_data(x, z)
    xi = check_states(xi, x.shape[1])
    if rates.n_informants != x.shape[0]:
        raise ValueError(f"{rates.n_informants} rate sets for {x.shape[0]} informants")
    lik = dyad_likelihood(
        x, xi[None, :], rates.phi[:, None], rates.tau[:, None], rates.omega[:, None]
    )
    with np.errstate(divide="ignore"):
        return float(np.log(lik[z]).sum())


def graph_prior_probs(prior: GraphPrior | float) -> np.ndarray:
    """Prior probabilities of the dyad states, ordered as ``STATE_ORDER``."""
    lam = prior.lam if isinstance(prior, GraphPrior) else GraphPrior(float(prior)).lam
    return np.array([(1 - lam) / 2, (1 - lam) / 2, lam])


def build_error_priors(rho: float, gamma: float, m: int) -> ErrorPriors:
    """Exchangeable error priors from the error-to-correct ratio ``rho``.

    Decisive truth: Dir(rho*gamma/2, rho*gamma/2, gamma).
    Tied truth:     Dir(rho*gamma, gamma).
    """
    if not 0 <= rho < 1:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if rho == 0:
        raise ValueError("rho = 0 gives zero error concentrations, which is not a valid Dirichlet")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if m < 1:
        raise ValueError(f"need at least one informant, got {m}")
    err = rho * gamma
    return ErrorPriors(
        alpha=np.full(m, err / 2),
        beta=np.full(m, err / 2),
        gamma=np.full(m, float(gamma)),
        delta=np.full(m, err),
        epsilon=np.full(m, float(gamma)),
    )


def _indicator_terms(x, xi):
    """The five per-cell outcome indicators, in ``COUNT_NAMES`` order."""
    ax = np.abs(x)
    axi = np.abs(xi)
    half_sum = 0.5 * np.abs(xi + x)
    axx = np.abs(xi * x)
    return (
        axx * (1 - half_sum),
        axi * (1 - ax),
        axx * half_sum,
        (1 - axi) * ax,
        (1 - axi) * (1 - ax),
    )


def _category_table() -> np.ndarray:
    states = np.array(STATE_ORDER)
    terms = np.stack(_indicator_terms(states[None, :], states[:, None]))
    if not np.array_equal(terms.sum(axis=0), np.ones((3, 3))):
        raise AssertionError("outcome indicators do not partition the cells")
    return terms.argmax(axis=0).astype(np.int8)


#: ``COUNT_CATEGORY[s, r]``: outcome category for true state index ``s`` and
#: report index ``r`` (both indices into ``STATE_ORDER``).
COUNT_CATEGORY = _category_table()


def sufficient_counts(x, z, xi) -> SufficientCounts:
    x, z = _check_data(x, z)
    xi = check_states(xi, x.shape[1]).astype(np.int64)
    x = x.astype(np.int64)
    terms = _indicator_terms(x, xi[None, :])
    counts = np.stack([(t * z).sum(axis=1) for t in terms], axis=1)
    return SufficientCounts(np.rint(counts).astype(np.int64))
