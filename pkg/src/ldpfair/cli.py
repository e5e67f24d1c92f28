"""Command-line interface.

Subcommands:
  gen-data    synthesize a canonical dataset file
  ingest      canonicalize a raw CSV into a dataset file
  run         execute an experiment config (JSON)
  advise-rho  preimage statistics table for threshold selection
  version     print the package version

Exit codes: 0 success, 2 config error, 3 infeasible-only sweep, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .datasets import (
    EmptyAfterFilter,
    IngestOptions,
    ParseError,
    gen_gaussian,
    gen_uniform,
    ingest_csv,
    save_dataset,
)
from .harness import ConfigError, ExperimentConfig, InfeasibleSweep, run_experiment
from .metrics import rho_advisor, write_advisor_csv
from .rng import PURPOSE_DATASET, derive_stream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpfair", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    g.add_argument("--kind", choices=["gaussian", "uniform"], default="gaussian")
    g.add_argument("--n", type=int, default=100_000)
    g.add_argument("--domain-size", type=int, default=100)
    g.add_argument("--mu", type=float, default=50.0)
    g.add_argument("--sigma", type=float, default=7.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    i = sub.add_parser("ingest", help="canonicalize a raw CSV")
    i.add_argument("--mode", choices=["single", "transactions", "cross"], required=True)
    i.add_argument("--path", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--top-k", type=int, default=None)
    i.add_argument("--columns", default="0", help="comma-separated column indices")
    i.add_argument("--delimiter", default=",")
    i.add_argument("--has-header", action="store_true")
    i.add_argument("--missing", default=",?", help="comma-separated missing tokens")

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True, help="JSON config file")
    r.add_argument("--workers", type=int, default=None, help="override config workers")

    a = sub.add_parser("advise-rho", help="preimage statistics per candidate rho")
    a.add_argument("--domain-size", type=int, required=True)
    a.add_argument("--epsilon", type=float, required=True)
    a.add_argument("--rhos", required=True, help="comma-separated candidates")
    a.add_argument("--sample-users", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", default=None, help="CSV path (default: print)")

    sub.add_parser("version", help="print version")
    return parser


def _cmd_gen_data(args: argparse.Namespace) -> int:
    rng = derive_stream(args.seed, 0, 0, PURPOSE_DATASET)
    if args.kind == "gaussian":
        ds = gen_gaussian(mu=args.mu, sigma=args.sigma, n=args.n,
                          domain_size=args.domain_size, rng=rng)
    else:
        ds = gen_uniform(n=args.n, domain_size=args.domain_size, rng=rng)
    save_dataset(args.out, ds)
    print(f"wrote {ds.n_users} values over domain {ds.domain_size} to {args.out}")
    return EXIT_OK


def _cmd_ingest(args: argparse.Namespace) -> int:
    columns = tuple(int(c) for c in args.columns.split(",") if c != "")
    missing = frozenset(args.missing.split(",")) | {""}
    options = IngestOptions(
        mode=args.mode,
        delimiter=args.delimiter,
        has_header=args.has_header,
        columns=columns,
        top_k=args.top_k,
        missing_tokens=missing,
    )
    ds = ingest_csv(args.path, options)
    save_dataset(args.out, ds)
    if ds.labels:
        labels_path = args.out + ".labels.csv"
        with open(labels_path, "w") as f:
            f.write("index,label\n")
            for idx, label in enumerate(ds.labels):
                f.write(f'{idx},"{label}"\n')
        print(f"labels written to {labels_path}")
    print(f"wrote {ds.n_users} values over domain {ds.domain_size} to {args.out}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_json(args.config)
    if args.workers is not None:
        config.workers = args.workers
        config.validate()
    result = run_experiment(config)
    print(f"results:  {result.results_path}")
    print(f"summary:  {result.summary_path}")
    print(f"manifest: {result.manifest_path}")
    if result.manifest["infeasible_points"]:
        for point in result.manifest["infeasible_points"]:
            print(f"infeasible: {point}", file=sys.stderr)
    return EXIT_OK


def _cmd_advise_rho(args: argparse.Namespace) -> int:
    rhos = [float(r) for r in args.rhos.split(",") if r]
    rng = derive_stream(args.seed, 0, 0, 0)
    rows = rho_advisor(args.domain_size, args.epsilon, rhos, args.sample_users, rng)
    if args.out:
        write_advisor_csv(args.out, rows)
        print(f"wrote {args.out}")
    else:
        print("rho,p_min,p_max,p_avg,theoretical_avg,mean_draws,infeasible")
        for r in rows:
            label = "olh" if r.rho is None else r.rho
            if r.infeasible or r.stats is None:
                print(f"{label},,,,,,true")
            else:
                print(
                    f"{label},{r.stats.p_min},{r.stats.p_max},{r.stats.p_avg},"
                    f"{r.stats.theoretical_avg},{r.mean_draws},false"
                )
    if all(r.infeasible for r in rows[:-1]) and len(rows) > 1:
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-data":
            return _cmd_gen_data(args)
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "advise-rho":
            return _cmd_advise_rho(args)
        if args.command == "version":
            print(__version__)
            return EXIT_OK
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, EmptyAfterFilter) as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleSweep as exc:
        print(f"infeasible sweep: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
