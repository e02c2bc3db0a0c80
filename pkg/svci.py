#!/usr/bin/env python
"""
svci command line.

    svci simulate -c scenario.json -o out/
    svci fit -c run.json -o out/ [--lambda 0.01]
    svci path -c run.json -o out/ [--n-lambda 20 | --lambdas 0.1,0.01]
    svci evaluate --truth truth.csv --est coefficients.csv [-o out/]
    svci export-graph -c run.json -o out/

Flags override values of the configuration file, which override the defaults.
"""
import argparse
import sys
from typing import Dict, List, Optional

from constants.cli_constants import Command, EXIT_BAD_CONFIG
from constants.graph_constants import GraphMethod
from constants.quadrature_constants import DeltaMode, LikelihoodKind
from libs.exceptions import BadRuntimeConfigurationError


def _float_list(text: str) -> List[float]:
    try:
        return [float(value) for value in text.split(",") if value.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, received {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svci", description="Spatially varying coefficient intensity models.")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser, config_help: str):
        sub.add_argument("-c", "--config", default=None, help=config_help)
        sub.add_argument("-o", "--output", default=None, help="output directory, created if missing")
        sub.add_argument("--seed", type=int, default=None, help="top-level seed of every random stream")
        sub.add_argument("--threads", type=int, default=None, help="worker threads (default SVCI_THREADS)")

    def add_data(sub: argparse.ArgumentParser):
        sub.add_argument("--points", default=None, help="point csv, overrides the configuration")
        sub.add_argument("--kind", choices=LikelihoodKind.values(), default=None, help="composite likelihood")
        sub.add_argument("--nd", type=int, default=None, help="target number of dummy points")
        sub.add_argument("--delta-mode", choices=DeltaMode.values(), default=None, help="logistic dummy density")
        sub.add_argument("--graph", choices=GraphMethod.values(), default=None, help="graph construction")
        sub.add_argument("--graph-k", type=int, default=None, help="neighbors of the knn graph")
        sub.add_argument("--dedup", action="store_true", default=None, help="drop exactly repeated points")

    add_common(commands.add_parser(Command.simulate, help="simulate a scenario"), "scenario specification json")

    fit = commands.add_parser(Command.fit, help="fit at one lambda")
    add_common(fit, "run configuration json")
    add_data(fit)
    fit.add_argument("--lambda", dest="lam", type=float, default=None, help="penalty level")

    path = commands.add_parser(Command.path, help="fit a lambda path and select by BIC")
    add_common(path, "run configuration json")
    add_data(path)
    path.add_argument("--n-lambda", type=int, default=None, help="grid size below lambda_max")
    path.add_argument("--lambdas", type=_float_list, default=None, help="explicit grid, comma separated")

    export = commands.add_parser(Command.export_graph, help="write the quadrature points and their graph")
    add_common(export, "run configuration json")
    add_data(export)

    evaluate = commands.add_parser(Command.evaluate, help="score an estimate against a truth table")
    add_common(evaluate, "optional run configuration json (for its domain block)")
    evaluate.add_argument("--truth", default=None, help="truth csv written by simulate")
    evaluate.add_argument("--est", default=None, help="coefficients csv written by fit or path")
    return parser


def overrides_from(args: argparse.Namespace) -> Dict:
    """ The configuration values given as flags.  None means not given. """
    get = lambda name: getattr(args, name, None)
    overrides = {
        "seed": get("seed"),
        "threads": get("threads"),
        "points": get("points"),
        "lambda": get("lam"),
        "n_lambda": get("n_lambda"),
        "lambdas": get("lambdas"),
        "truth": get("truth"),
        "estimate": get("est"),
        "dedup": get("dedup"),
    }
    quadrature = {key: value for key, value in (
        ("kind", get("kind")), ("nd", get("nd")), ("delta_mode", get("delta_mode"))
    ) if value is not None}
    graph = {key: value for key, value in (("method", get("graph")), ("k", get("graph_k"))) if value is not None}
    if quadrature:
        overrides["quadrature"] = quadrature
    if graph:
        overrides["graph"] = graph
    return overrides


def load_runner():
    # imported here so that --help does not pay for numpy and scipy, and so that bad environment
    # settings surface as a configuration error
    from commands.runner import run_from_sources
    return run_from_sources


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_from_sources = load_runner()
    except BadRuntimeConfigurationError as e:
        print(f"svci: bad runtime settings:{e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    overrides = overrides_from(args)
    config_path = args.config
    if args.command == Command.simulate:
        # the -c file of simulate is the scenario itself
        overrides["scenario"], config_path = args.config, None
    return run_from_sources(args.command, args.output, config_path, overrides)


if __name__ == "__main__":
    sys.exit(main())
