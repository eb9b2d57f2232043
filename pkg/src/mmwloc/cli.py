"""Command-line experiment runner.

Subcommands: ``run <experiment>``, ``dump-dictionary``, ``optimize``,
``validate``. Configuration comes from an optional flat key=value file
(boundary units: dBm, dBm/Hz, per-km) plus dotted-key overrides, each of
which is also exposed as a flag of the same dotted name.

Exit codes: 0 on success, 2 for configuration errors, 3 for numeric
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (
    NetworkConfig,
    boundary_keys,
    from_boundary_mapping,
    parse_config_text,
)
from .errors import ConfigError, NumericError
from .experiments import (
    EXPERIMENT_NAMES,
    ExperimentSpec,
    dump_dictionary,
    run_experiment,
)
from .optimizer import OptimizationSpec, optimize_beamwidth

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="flat key=value config file (boundary units)")
    parser.add_argument("--out", type=Path, default=Path("results"),
                        help="output directory")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--threads", type=int, default=1)
    for key in boundary_keys():
        parser.add_argument(f"--{key}", dest=key, default=None,
                            metavar="V", help=argparse.SUPPRESS)
    parser.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="dotted-key override (network.* or experiment.*)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwloc",
        description="mm-wave joint localization/communication analyzer")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a named experiment sweep")
    run_p.add_argument("experiment", choices=EXPERIMENT_NAMES)
    _add_common(run_p)

    dump_p = sub.add_parser("dump-dictionary", help="export the beam database")
    _add_common(dump_p)
    dump_p.add_argument("--cell-size", type=float, default=None)
    dump_p.add_argument("--n-max", type=int, default=32)

    opt_p = sub.add_parser("optimize", help="optimal beamwidth and frame split")
    _add_common(opt_p)
    opt_p.add_argument("--r0", type=float, default=1.0e8)
    opt_p.add_argument("--eps-bs", type=float, default=0.1)
    opt_p.add_argument("--eps-ma", type=float, default=0.1)

    val_p = sub.add_parser("validate",
                           help="analytical vs Monte Carlo validation grid")
    _add_common(val_p)
    return parser


def _collect_overrides(args) -> dict:
    entries = {}
    if args.config is not None:
        try:
            entries.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    for key in boundary_keys():
        value = getattr(args, key, None)
        if value is not None:
            entries[key] = value
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def _split_sections(entries: dict) -> tuple:
    network = {k: v for k, v in entries.items() if k.startswith("network.")}
    experiment = {k: v for k, v in entries.items()
                  if k.startswith("experiment.")}
    unknown = set(entries) - set(network) - set(experiment)
    if unknown:
        raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
    return network, experiment


def _build_config(entries: dict) -> NetworkConfig:
    return from_boundary_mapping(entries)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        entries = _collect_overrides(args)
        network_entries, experiment_entries = _split_sections(entries)
        cfg = _build_config(network_entries)

        if args.command == "run":
            spec = ExperimentSpec(name=args.experiment, cfg=cfg,
                                  out_dir=args.out, seed=args.seed,
                                  trials=args.trials, threads=args.threads,
                                  overrides=experiment_entries)
            outputs = run_experiment(spec)
            for path in outputs:
                print(path)
        elif args.command == "dump-dictionary":
            print(dump_dictionary(cfg, args.out, args.cell_size, args.n_max))
        elif args.command == "optimize":
            spec = OptimizationSpec(r0=args.r0, eps_bs=args.eps_bs,
                                    eps_ma=args.eps_ma)
            result = optimize_beamwidth(spec, cfg)
            if not result.feasible:
                print("infeasible: no (k, beta) pair meets the error caps")
            else:
                print(f"k_star={result.k_star} beta_star={result.beta_star} "
                      f"theta_star={result.theta_star:.6f} "
                      f"objective={result.objective:.6f}")
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            table = out / "optimizer_per_k.csv"
            with open(table, "w") as fh:
                fh.write("k,theta_u,feasible,beta_star,objective,p_bs,p_ma\n")
                for row in result.per_k_table:
                    fh.write(",".join(str(v) if v is not None else ""
                                      for v in (row.k, row.theta_u,
                                                row.feasible, row.beta_star,
                                                row.objective, row.p_bs,
                                                row.p_ma)) + "\n")
            print(table)
        elif args.command == "validate":
            spec = ExperimentSpec(name="validate-analytical", cfg=cfg,
                                  out_dir=args.out, seed=args.seed,
                                  trials=args.trials, threads=args.threads,
                                  overrides=experiment_entries)
            for path in run_experiment(spec):
                print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
