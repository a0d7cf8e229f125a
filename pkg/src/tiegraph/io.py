"""File formats: reports, run configuration, draws, and posterior tables.

Every table this package writes starts with a ``#format_version=1`` line,
followed by a comma-separated header. Floats are written with 17
significant digits, so a dump/load cycle reproduces them exactly. All
writes go to a temporary file that is renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .diagnostics import QUANTILES, RATE_NAMES, PosteriorSummary
from .graph import Roster, dyad_flat, iter_dyads
from .model import ErrorPriors, ErrorRates, GraphPrior, build_error_priors
from .sampler import ChainTrace, SamplerConfig

FORMAT_VERSION = 1
VERSION_LINE = f"#format_version={FORMAT_VERSION}"
REPORT_HEADER = ["informant", "ego", "alter", "outcome"]
OUTCOMES = ("ego", "alter", "tie", "missing")


class FormatError(ValueError):
    """A user-facing problem with an input file."""


def fmt_float(value: float) -> str:
    return format(float(value), ".17g")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(header: Sequence[str], rows, versioned: bool = True) -> str:
    buf = io.StringIO()
    if versioned:
        buf.write(VERSION_LINE + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_table(path, expected_header: Sequence[str] | None = None):
    """Rows of a comma-separated file with ``#`` comment lines skipped.

    Returns ``(header, [(line_number, row), ...])``.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        lines = [(n, line) for n, line in enumerate(fh, start=1) if not line.startswith("#")]
    lines = [(n, line) for n, line in lines if line.strip()]
    if not lines:
        return None, []
    parsed = csv.reader(line for _, line in lines)
    rows = [(n, row) for (n, _), row in zip(lines, parsed)]
    (hline, header), body = rows[0], rows[1:]
    if expected_header is not None and header != list(expected_header):
        raise FormatError(f"{path}:{hline}: expected header {','.join(expected_header)}, got {','.join(header)}")
    for n, row in body:
        if len(row) != len(header):
            raise FormatError(f"{path}:{n}: expected {len(header)} fields, got {len(row)}")
    return header, body


# -- roster ----------------------------------------------------------------

def load_roster(path) -> Roster:
    with Path(path).open(encoding="utf-8") as fh:
        labels = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    try:
        return Roster(labels)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def dump_roster(path, roster: Roster) -> None:
    atomic_write(path, "".join(f"{label}\n" for label in roster.labels))


# -- reports ---------------------------------------------------------------

class Reports(NamedTuple):
    x: np.ndarray
    z: np.ndarray
    informants: tuple


def load_reports(path, roster: Roster, informants: Sequence[str] | None = None) -> Reports:
    """Read long-format reports into an (M, D) report matrix and inclusion mask.

    Informant rows follow ``informants`` when given, else sorted id order.
    Dyads an informant never mentions are unobserved.
    """
    _, body = _read_table(path, REPORT_HEADER)
    index = {label: i for i, label in enumerate(roster.labels)}
    seen: dict[tuple, int] = {}
    records = []
    for n, (informant, ego, alter, outcome) in body:
        where = f"{path}:{n}"
        if ego not in index:
            raise FormatError(f"{where}: unknown vertex label {ego!r}")
        if alter not in index:
            raise FormatError(f"{where}: unknown vertex label {alter!r}")
        if ego == alter:
            raise FormatError(f"{where}: self-dyad ({ego!r}, {alter!r})")
        if outcome not in OUTCOMES:
            raise FormatError(f"{where}: outcome {outcome!r} is not one of {', '.join(OUTCOMES)}")
        i, j = index[ego], index[alter]
        key = (informant, min(i, j), max(i, j))
        if key in seen:
            raise FormatError(
                f"{where}: duplicate record for informant {informant!r} on dyad "
                f"{{{ego}, {alter}}} (first seen on line {seen[key]})"
            )
        seen[key] = n
        records.append((informant, i, j, outcome))
    if informants is None:
        informants = sorted({rec[0] for rec in records})
    informants = tuple(informants)
    row = {k: r for r, k in enumerate(informants)}
    if len(row) != len(informants):
        raise FormatError("duplicate informant ids")
    n = roster.n_vertices
    d = roster.n_dyads
    x = np.zeros((len(informants), d), dtype=np.int8)
    z = np.zeros((len(informants), d), dtype=bool)
    for informant, i, j, outcome in records:
        if informant not in row:
            raise FormatError(f"{path}: informant {informant!r} is not in the informant list")
        if outcome == "missing":
            continue
        lo = min(i, j)
        flat = dyad_flat(i, j, n)
        if outcome == "tie":
            value = 0
        else:
            winner = i if outcome == "ego" else j
            value = 1 if winner == lo else -1
        x[row[informant], flat] = value
        z[row[informant], flat] = True
    return Reports(x, z, informants)


def dump_reports(path, x, z, roster: Roster, informants: Sequence[str]) -> None:
    """Write every (informant, dyad) cell; unobserved cells become ``missing``."""
    x = np.asarray(x)
    z = np.asarray(z, dtype=bool)
    rows = []
    for k, informant in enumerate(informants):
        for dyad in iter_dyads(roster.n_vertices):
            if not z[k, dyad.flat]:
                outcome = "missing"
            else:
                outcome = {1: "ego", -1: "alter", 0: "tie"}[int(x[k, dyad.flat])]
            rows.append([informant, roster.labels[dyad.i], roster.labels[dyad.j], outcome])
    atomic_write(path, _table(REPORT_HEADER, rows, versioned=False))


# -- graphs and rates ------------------------------------------------------

def dump_graph(path, xi, roster: Roster) -> None:
    """Edge list over all dyads; ``state`` is +1 when ``ego`` dominates."""
    rows = [
        [roster.labels[d.i], roster.labels[d.j], int(xi[d.flat])]
        for d in iter_dyads(roster.n_vertices)
    ]
    atomic_write(path, _table(["ego", "alter", "state"], rows))


def load_graph(path, roster: Roster) -> np.ndarray:
    _, body = _read_table(path, ["ego", "alter", "state"])
    expected = [(roster.labels[d.i], roster.labels[d.j]) for d in iter_dyads(roster.n_vertices)]
    if [(r[0], r[1]) for _, r in body] != expected:
        raise FormatError(f"{path}: dyads do not match the roster's canonical order")
    try:
        xi = np.array([int(r[2]) for _, r in body], dtype=np.int8)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not np.isin(xi, (-1, 0, 1)).all():
        raise FormatError(f"{path}: states must be -1, 0 or 1")
    return xi


def dump_rates(path, rates: ErrorRates, informants: Sequence[str]) -> None:
    rows = [[k] + [fmt_float(v) for v in row] for k, row in zip(informants, rates.as_array())]
    atomic_write(path, _table(["informant", *RATE_NAMES], rows))


def load_rates(path) -> tuple[ErrorRates, tuple]:
    _, body = _read_table(path, ["informant", *RATE_NAMES])
    arr = np.array([[float(v) for v in r[1:]] for _, r in body]).reshape(-1, 3)
    return ErrorRates(arr[:, 0], arr[:, 1], arr[:, 2]), tuple(r[0] for _, r in body)


# -- draws -----------------------------------------------------------------

def _check_label(label: str):
    if "|" in label:
        raise FormatError(f"label {label!r} contains '|', which the draws header reserves")


def dump_draws(path, chains: Sequence[ChainTrace], roster: Roster, informants: Sequence[str]) -> None:
    for label in (*roster.labels, *informants):
        _check_label(str(label))
    header = ["chain", "iteration"]
    header += [f"{roster.labels[d.i]}|{roster.labels[d.j]}" for d in iter_dyads(roster.n_vertices)]
    header += [f"{name}|{k}" for k in informants for name in RATE_NAMES]
    buf = io.StringIO()
    buf.write(VERSION_LINE + "\n")
    buf.write(",".join(header) + "\n")
    for c, chain in enumerate(chains):
        flat_rates = chain.rates.reshape(len(chain), -1)
        for t in range(len(chain)):
            fields = [str(c), str(int(chain.iterations[t]))]
            fields += [str(int(s)) for s in chain.xi[t]]
            fields += [fmt_float(v) for v in flat_rates[t]]
            buf.write(",".join(fields) + "\n")
    atomic_write(path, buf.getvalue())


def load_draws(path) -> tuple[list[ChainTrace], Roster, tuple]:
    header, body = _read_table(path)
    if header is None or header[:2] != ["chain", "iteration"]:
        raise FormatError(f"{path}: not a draws file")
    dyad_cols = [h for h in header[2:] if not h.startswith(tuple(f"{r}|" for r in RATE_NAMES))]
    rate_cols = header[2 + len(dyad_cols):]
    if len(rate_cols) % 3:
        raise FormatError(f"{path}: rate columns must come in (phi, tau, omega) triples")
    pairs = [col.split("|") for col in dyad_cols]
    if not pairs or any(len(p) != 2 for p in pairs):
        raise FormatError(f"{path}: malformed dyad columns")
    first = pairs[0][0]
    labels = [first] + [alter for ego, alter in pairs if ego == first]
    roster = Roster(labels)
    expected = [f"{labels[d.i]}|{labels[d.j]}" for d in iter_dyads(len(labels))]
    if dyad_cols != expected:
        raise FormatError(f"{path}: dyad columns are not in canonical order")
    informants = tuple(col.split("|", 1)[1] for col in rate_cols[::3])
    expected_rates = [f"{name}|{k}" for k in informants for name in RATE_NAMES]
    if rate_cols != expected_rates:
        raise FormatError(f"{path}: rate columns must be phi|k, tau|k, omega|k per informant")
    d, m = len(dyad_cols), len(informants)
    by_chain: dict[int, list] = {}
    for n, row in body:
        try:
            by_chain.setdefault(int(row[0]), []).append(row)
        except ValueError:
            raise FormatError(f"{path}:{n}: bad chain index {row[0]!r}") from None
    if sorted(by_chain) != list(range(len(by_chain))):
        raise FormatError(f"{path}: chain indices must be 0..C-1")
    chains = []
    for c in range(len(by_chain)):
        rows = by_chain[c]
        iters = np.array([int(r[1]) for r in rows], dtype=np.int64)
        xi = np.array([[int(v) for v in r[2:2 + d]] for r in rows], dtype=np.int8).reshape(-1, d)
        rates = np.array([[float(v) for v in r[2 + d:]] for r in rows]).reshape(-1, m, 3)
        chains.append(ChainTrace(xi, rates, iters))
    return chains, roster, informants


# -- posterior tables ------------------------------------------------------

def dump_marginals(path, marginals: np.ndarray, roster: Roster) -> None:
    rows = [
        [roster.labels[d.i], roster.labels[d.j], *(fmt_float(p) for p in marginals[d.flat])]
        for d in iter_dyads(roster.n_vertices)
    ]
    atomic_write(path, _table(["ego", "alter", "p_plus", "p_minus", "p_zero"], rows))


def load_marginals(path, roster: Roster) -> np.ndarray:
    _, body = _read_table(path, ["ego", "alter", "p_plus", "p_minus", "p_zero"])
    expected = [(roster.labels[d.i], roster.labels[d.j]) for d in iter_dyads(roster.n_vertices)]
    if [(r[0], r[1]) for _, r in body] != expected:
        raise FormatError(f"{path}: dyads do not match the roster's canonical order")
    return np.array([[float(v) for v in r[2:]] for _, r in body]).reshape(-1, 3)


def _quantile_name(q: float) -> str:
    return "q" + format(100 * q, "g")


def summary_to_dict(summary: PosteriorSummary, roster: Roster, informants: Sequence[str],
                    agreement: np.ndarray | None = None) -> dict:
    dyads = []
    for d in iter_dyads(roster.n_vertices):
        entry = {
            "ego": roster.labels[d.i],
            "alter": roster.labels[d.j],
            "p_plus": float(summary.marginals[d.flat, 0]),
            "p_minus": float(summary.marginals[d.flat, 1]),
            "p_zero": float(summary.marginals[d.flat, 2]),
            "map_state": int(summary.map_graph[d.flat]),
        }
        if agreement is not None:
            entry["chain_agreement"] = float(agreement[d.flat])
        dyads.append(entry)
    rates = []
    for k, informant in enumerate(informants):
        for r, name in enumerate(RATE_NAMES):
            entry = {"informant": informant, "rate": name, "mean": float(summary.rate_mean[k, r])}
            for qi, q in enumerate(QUANTILES):
                entry[_quantile_name(q)] = float(summary.rate_quantiles[k, r, qi])
            rh = float(summary.rhat[k, r])
            entry["rhat"] = rh if np.isfinite(rh) else str(rh)
            rates.append(entry)
    return {
        "format_version": FORMAT_VERSION,
        "n_retained": int(summary.n_retained),
        "dyads": dyads,
        "rates": rates,
    }


def dump_summary(out_dir, summary: PosteriorSummary, roster: Roster, informants: Sequence[str],
                 agreement: np.ndarray | None = None) -> None:
    """Write the marginals, MAP graph, rate summaries, R-hat table and summary.json."""
    out_dir = Path(out_dir)
    dump_marginals(out_dir / "marginals.csv", summary.marginals, roster)
    dump_graph(out_dir / "map_graph.csv", summary.map_graph, roster)
    qnames = [_quantile_name(q) for q in QUANTILES]
    rate_rows, rhat_rows = [], []
    for k, informant in enumerate(informants):
        for r, name in enumerate(RATE_NAMES):
            rate_rows.append(
                [informant, name, fmt_float(summary.rate_mean[k, r])]
                + [fmt_float(v) for v in summary.rate_quantiles[k, r]]
            )
            rhat_rows.append([informant, name, fmt_float(summary.rhat[k, r])])
    atomic_write(out_dir / "rates.csv", _table(["informant", "rate", "mean", *qnames], rate_rows))
    atomic_write(out_dir / "rhat.csv", _table(["informant", "rate", "rhat"], rhat_rows))
    payload = summary_to_dict(summary, roster, informants, agreement)
    atomic_write(out_dir / "summary.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- configuration ---------------------------------------------------------

_PRIOR_KEYS = ("alpha", "beta", "gamma", "delta", "epsilon")
_RATE_KEYS = RATE_NAMES
_SAMPLER_KEYS = ("n_iterations", "burn_in", "thin", "n_chains", "seed", "clamp_error_rates")
_TOP_KEYS = ("format_version", "lambda", "rho", "gamma", "priors", "sampler", "roster")
WILDCARD = "*"


def _reject_unknown(where: str, mapping: dict, allowed: Sequence[str]):
    if not isinstance(mapping, dict):
        raise FormatError(f"{where}: expected an object")
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise FormatError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")


@dataclass
class RunConfig:
    """Inference settings.

    Error priors come either from ``(rho, gamma)`` or from ``priors``, a
    mapping informant id -> {alpha, beta, gamma, delta, epsilon}; the key
    ``"*"`` supplies a default for informants not listed. ``clamp_error_rates``
    uses the same layout with {phi, tau, omega}.
    """

    lam: float
    n_iterations: int
    rho: float | None = None
    gamma: float | None = None
    priors: dict | None = None
    burn_in: int = 0
    thin: int = 1
    n_chains: int = 1
    seed: int = 0
    clamp_error_rates: dict | None = None
    roster: list | None = field(default=None)

    def __post_init__(self):
        GraphPrior(self.lam)
        if (self.priors is None) == (self.rho is None and self.gamma is None):
            raise FormatError("give either rho and gamma or explicit priors, not both or neither")
        if self.priors is None and (self.rho is None or self.gamma is None):
            raise FormatError("rho and gamma must be given together")
        if self.priors is not None:
            for key, entry in self.priors.items():
                _reject_unknown(f"priors[{key!r}]", entry, _PRIOR_KEYS)
                missing = [p for p in _PRIOR_KEYS if p not in entry]
                if missing:
                    raise FormatError(f"priors[{key!r}]: missing {', '.join(missing)}")
        if self.clamp_error_rates is not None:
            for key, entry in self.clamp_error_rates.items():
                _reject_unknown(f"clamp_error_rates[{key!r}]", entry, _RATE_KEYS)
        self.sampler_config(())
        if self.roster is not None:
            Roster(self.roster)

    @property
    def graph_prior(self) -> GraphPrior:
        return GraphPrior(self.lam)

    def _per_informant(self, table: dict, informants: Sequence[str], keys, what: str) -> np.ndarray:
        unknown = sorted(set(table) - set(informants) - {WILDCARD})
        if unknown:
            raise FormatError(f"{what}: no reports from informant(s) {', '.join(map(repr, unknown))}")
        rows = []
        for k in informants:
            entry = table.get(k, table.get(WILDCARD))
            if entry is None:
                raise FormatError(f"{what}: nothing given for informant {k!r}")
            missing = [p for p in keys if p not in entry]
            if missing:
                raise FormatError(f"{what}[{k!r}]: missing {', '.join(missing)}")
            rows.append([float(entry[p]) for p in keys])
        return np.array(rows, dtype=np.float64).reshape(-1, len(keys))

    def error_priors(self, informants: Sequence[str]) -> ErrorPriors:
        if self.priors is None:
            return build_error_priors(self.rho, self.gamma, len(informants))
        arr = self._per_informant(self.priors, informants, _PRIOR_KEYS, "priors")
        return ErrorPriors(*arr.T)

    def sampler_config(self, informants: Sequence[str]) -> SamplerConfig:
        clamp = None
        if self.clamp_error_rates is not None and len(informants):
            arr = self._per_informant(self.clamp_error_rates, informants, _RATE_KEYS, "clamp_error_rates")
            clamp = ErrorRates(*arr.T)
        return SamplerConfig(
            n_iterations=self.n_iterations,
            burn_in=self.burn_in,
            thin=self.thin,
            n_chains=self.n_chains,
            seed=self.seed,
            clamp_error_rates=clamp,
        )

    def to_dict(self) -> dict:
        out = {"format_version": FORMAT_VERSION, "lambda": self.lam}
        if self.priors is None:
            out["rho"] = self.rho
            out["gamma"] = self.gamma
        else:
            out["priors"] = self.priors
        sampler = {
            "n_iterations": self.n_iterations,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "n_chains": self.n_chains,
            "seed": self.seed,
        }
        if self.clamp_error_rates is not None:
            sampler["clamp_error_rates"] = self.clamp_error_rates
        out["sampler"] = sampler
        if self.roster is not None:
            out["roster"] = list(self.roster)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        _reject_unknown("config", data, _TOP_KEYS)
        version = data.get("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise FormatError(f"config: unsupported format_version {version!r}")
        if "lambda" not in data:
            raise FormatError("config: missing 'lambda'")
        sampler = data.get("sampler")
        if sampler is None:
            raise FormatError("config: missing 'sampler'")
        _reject_unknown("config.sampler", sampler, _SAMPLER_KEYS)
        if "n_iterations" not in sampler:
            raise FormatError("config.sampler: missing 'n_iterations'")
        try:
            return cls(
                lam=data["lambda"],
                rho=data.get("rho"),
                gamma=data.get("gamma"),
                priors=data.get("priors"),
                roster=data.get("roster"),
                **sampler,
            )
        except FormatError:
            raise
        except (TypeError, ValueError) as exc:
            raise FormatError(f"config: {exc}") from None


def load_config(path) -> RunConfig:
    with Path(path).open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return RunConfig.from_dict(data)


def dump_config(path, config: RunConfig) -> None:
    atomic_write(path, json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


# -- simulation specs ------------------------------------------------------

_SIM_KEYS = (
    "format_version", "n_vertices", "n_informants", "lambda", "rates", "rho", "gamma",
    "missing_rate", "seed", "labels", "informants",
)


def informant_ids(m: int) -> tuple:
    width = len(str(m))
    return tuple(f"k{k:0{width}d}" for k in range(1, m + 1))


def load_simulation_spec(path):
    """Parse a simulation spec file; returns ``(SimulationSpec, informant ids)``."""
    from .simulate import SimulationSpec

    with Path(path).open(encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    _reject_unknown("simulation spec", data, _SIM_KEYS)
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise FormatError(f"simulation spec: unsupported format_version {version!r}")
    for key in ("n_vertices", "n_informants", "lambda"):
        if key not in data:
            raise FormatError(f"simulation spec: missing {key!r}")
    m = data["n_informants"]
    rates = None
    try:
        if "rates" in data:
            _reject_unknown("simulation spec.rates", data["rates"], _RATE_KEYS)
            r = data["rates"]
            rates = ErrorRates(*(np.broadcast_to(np.asarray(r[name], dtype=float), (m,)) for name in _RATE_KEYS))
        spec = SimulationSpec(
            n_vertices=data["n_vertices"],
            n_informants=m,
            lam=data["lambda"],
            rates=rates,
            rho=data.get("rho"),
            gamma=data.get("gamma"),
            missing_rate=data.get("missing_rate", 0.0),
            seed=data.get("seed", 0),
            labels=tuple(data["labels"]) if "labels" in data else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"simulation spec: {exc}") from None
    informants = tuple(data.get("informants", informant_ids(m)))
    if len(informants) != m or len(set(informants)) != m:
        raise FormatError(f"simulation spec: need {m} distinct informant ids")
    return spec, informants
