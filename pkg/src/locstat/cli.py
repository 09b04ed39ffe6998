"""Command-line front end.

Scenario flags mirror the keys of the JSON config (``--burn-in`` is
``burn_in``, ``--lambda`` is ``lambda``). With ``--config`` the file is read
first and explicit flags override it. Exit codes: 0 all checks passed,
1 a check failed (or a triangle was found), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import models
from .experiments import SCENARIO_RUNNERS, ConfigError, ExperimentConfig, TriangleFound
from .experiments.runner import dumps, write_outputs

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _count(text: str) -> int:
    """Integer that may be written as ``5e7``."""
    value = float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return int(value)


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags given here override it")
    p.add_argument("--n", type=int, help="number of vertices / spins")
    p.add_argument("--d", type=float, help="degree (indepset) or mean-degree parameter (sbm)")
    p.add_argument("--lambda", dest="lam", type=float, help="signal strength")
    p.add_argument("--beta", type=float, nargs="+", help="inverse temperature grid (sbm)")
    p.add_argument("--kappa", type=float, help="spectral margin of W (spiked)")
    p.add_argument("--steps", type=_count, help="coordinate updates per chain")
    p.add_argument("--time", type=float, help="continuous time; runs Poisson(time) updates instead of --steps")
    p.add_argument("--replicas", type=int, help="independent chains per setting")
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--out", help="output directory for report.json (and CSVs)")
    p.add_argument("--format", choices=("csv", "json"), help="json: report only; csv: report plus per-trajectory CSV")
    p.add_argument("--graph", help="edge-list file to use instead of a generated graph (indepset)")
    p.add_argument("--mode", choices=("uniform-time", "end-state"), help="statistic: time average or final state")
    p.add_argument("--stride", type=int, help="record observables every STRIDE updates (default n/10)")
    p.add_argument("--workers", type=int, help="worker processes for replicas")
    p.add_argument("--burn-in", dest="burn_in", type=float, help="burn-in fraction for the summaries")
    p.add_argument("--n-scan", dest="n_scan", type=int, nargs="+", help="extra sizes for the control scan (spiked)")
    p.add_argument("--instances", type=int, help="random instances per check (oracle)")


_CONFIG_ATTRS = ("n", "d", "lam", "beta", "kappa", "steps", "time", "replicas", "seed", "out", "format",
                 "graph", "mode", "stride", "workers", "burn_in", "n_scan", "instances")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locstat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"indepset": "hardcore Glauber on a triangle-free graph",
             "spiked": "Glauber on the spiked Wigner Ising model",
             "sbm": "Glauber on the centered SBM adjacency over a beta grid",
             "oracle": "exact-enumeration identity suite"}
    for name, text in helps.items():
        _scenario_flags(sub.add_parser(name, help=text, description=text))
    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--kind", choices=("bipartite", "sbm", "spiked"), default="bipartite")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="edge list for bipartite, JSON otherwise")
    v = sub.add_parser("validate", help="check that an edge-list graph is simple and triangle-free")
    v.add_argument("--graph", required=True)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(command)
    if cfg.scenario != command:
        raise ConfigError(f"config is for {cfg.scenario!r}, not {command!r}")
    for attr in _CONFIG_ATTRS:
        value = getattr(args, attr)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg.resolved()


def _gen(args) -> int:
    if args.kind == "bipartite":
        if args.d is None:
            raise ConfigError("--d is required")
        models.write_edge_list(models.gen_bipartite_regular(args.n, int(args.d), args.seed), args.out)
    elif args.kind == "sbm":
        if args.d is None or args.lam is None:
            raise ConfigError("--d and --lambda are required")
        models.dump_instance(models.sample_sbm(args.n, args.d, args.lam, args.seed), args.out)
    else:
        if args.lam is None or args.kappa is None:
            raise ConfigError("--lambda and --kappa are required")
        models.dump_instance(models.gen_spiked_wigner(args.n, args.lam, args.kappa, args.seed), args.out)
    print(args.out)
    return EXIT_OK


def _validate(args) -> int:
    graph = models.read_edge_list(args.graph)
    graph.check()
    tri = models.find_triangle(graph)
    if tri is not None:
        print(f"triangle found: {' '.join(str(int(v)) for v in tri)}", file=sys.stderr)
        return EXIT_FAIL
    print(f"ok: n={graph.n} edges={graph.num_edges} max_degree={graph.max_degree} triangle-free")
    return EXIT_OK


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _gen(args)
        if args.command == "validate":
            return _validate(args)
        cfg = resolve_config(args.command, args)
        report, trajectories = SCENARIO_RUNNERS[args.command](cfg)
    except TriangleFound as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, models.InstanceError, models.RejectionBudgetExhausted, OSError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_outputs(report, trajectories, cfg.out, cfg.format)
    sys.stdout.write(dumps(report))
    for c in report["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: {c['value']!r} {c['op']} {c['threshold']!r}",
              file=sys.stderr)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def main(argv=None) -> None:
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
