"""Command-line interface: ``tiegraph {simulate,infer,summarize,oracle-check}``.

Exit codes: 0 success, 2 validation error, 3 oracle-check tolerance failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .diagnostics import dyad_agreement, summarize
from .graph import Roster, iter_dyads
from .oracle import DEFAULT_MAX_DYADS, collapsed_exact_posterior, exact_fixed_error_posterior
from .sampler import gibbs_run
from .simulate import simulate

log = logging.getLogger("tiegraph")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_TOLERANCE = 3


def _load_inputs(args):
    config = io.load_config(args.config)
    if args.roster is not None:
        roster = io.load_roster(args.roster)
    elif config.roster is not None:
        roster = Roster(config.roster)
    else:
        raise io.FormatError("no roster: pass --roster or set 'roster' in the config")
    reports = io.load_reports(args.reports, roster)
    if not reports.informants:
        raise io.FormatError(f"{args.reports}: no informants")
    return config, roster, reports


def _run(config, reports):
    priors = config.error_priors(reports.informants)
    sampler_config = config.sampler_config(reports.informants)
    chains = gibbs_run(reports.x, reports.z, config.graph_prior, priors, sampler_config)
    return chains, priors, sampler_config


def _write_posterior(out, chains, roster, informants):
    summary = summarize(chains)
    agreement = dyad_agreement(chains) if len(chains) > 1 else None
    io.dump_summary(out, summary, roster, informants, agreement)
    return summary


def cmd_simulate(args) -> int:
    spec, informants = io.load_simulation_spec(args.spec)
    data = simulate(spec)
    out = Path(args.out)
    io.dump_roster(out / "roster.txt", data.roster)
    io.dump_reports(out / "reports.csv", data.reports, data.mask, data.roster, informants)
    io.dump_graph(out / "truth_graph.csv", data.truth, data.roster)
    io.dump_rates(out / "truth_rates.csv", data.true_rates, informants)
    log.info("wrote %d informants x %d dyads to %s", len(informants), data.roster.n_dyads, out)
    return EXIT_OK


def cmd_infer(args) -> int:
    config, roster, reports = _load_inputs(args)
    chains, _, _ = _run(config, reports)
    out = Path(args.out)
    io.dump_draws(out / "draws.csv", chains, roster, reports.informants)
    _write_posterior(out, chains, roster, reports.informants)
    return EXIT_OK


def cmd_summarize(args) -> int:
    chains, roster, informants = io.load_draws(args.draws)
    if not chains:
        raise io.FormatError(f"{args.draws}: no draws")
    _write_posterior(Path(args.out), chains, roster, informants)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    config, roster, reports = _load_inputs(args)
    if roster.n_dyads > args.max_dyads:
        raise io.FormatError(
            f"oracle-check needs at most {args.max_dyads} dyads, roster has {roster.n_dyads}"
        )
    chains, priors, sampler_config = _run(config, reports)
    sampled = summarize(chains).marginals
    if sampler_config.clamp_error_rates is not None:
        kind = "fixed-error"
        exact = exact_fixed_error_posterior(
            reports.x, reports.z, sampler_config.clamp_error_rates, config.graph_prior
        )
    else:
        kind = "collapsed"
        exact = collapsed_exact_posterior(
            reports.x, reports.z, config.graph_prior, priors, max_dyads=args.max_dyads
        )
    diff = np.abs(sampled - exact.marginals).max(axis=1)
    print(f"oracle: {kind}; tolerance {args.tolerance:g}")
    print("ego,alter,max_abs_diff")
    for d in iter_dyads(roster.n_vertices):
        print(f"{roster.labels[d.i]},{roster.labels[d.j]},{diff[d.flat]:.6f}")
    worst = float(diff.max())
    ok = worst <= args.tolerance
    print(f"max_abs_diff={worst:.6f} {'PASS' if ok else 'FAIL'}")
    if args.out is not None:
        out = Path(args.out)
        io.dump_marginals(out / "oracle_marginals.csv", exact.marginals, roster)
        io.dump_marginals(out / "marginals.csv", sampled, roster)
    return EXIT_OK if ok else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiegraph",
        description="Infer a tournament graph with ties and informant error rates by Gibbs sampling.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic dataset with a truth sidecar")
    p.add_argument("spec", help="simulation spec (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("infer", cmd_infer, "run the sampler and write posterior outputs"),
        ("oracle-check", cmd_oracle_check, "compare sampler marginals with an exact oracle"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--reports", required=True, help="long-format reports CSV")
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--roster", help="roster file, one label per line (overrides the config)")
        if name == "infer":
            p.add_argument("--out", required=True, help="output directory")
        else:
            p.add_argument("--out", help="optional directory for oracle and sampler marginals")
            p.add_argument("--tolerance", type=float, default=0.02)
            p.add_argument("--max-dyads", type=int, default=DEFAULT_MAX_DYADS)
        p.set_defaults(func=func)

    p = sub.add_parser("summarize", help="summarize an existing draws file")
    p.add_argument("draws", help="draws CSV written by infer")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"tiegraph: error: {message}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
