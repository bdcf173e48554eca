"""Command-line entry point: ``uavgame {solve,simulate,sweep}``."""
from __future__ import annotations

import argparse
import json
import sys

from .cpt import PTParams, TruncationConfig
from .experiments import DEFAULT_SWEEP_VALUES, SWEEP_ALIASES, ExperimentConfig, fmt, resolve_params, run
from .graph import load_instance
from .search import SearchConfig


def _pt_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("prospect-theory parameters (unset values come from the instance, else rational)")
    for who in ("I", "U"):
        g.add_argument(f"--R-{who}", type=float, help=f"reference point of {who}")
        g.add_argument(f"--lambda-{who}", type=float, help=f"loss multiplier of {who}")
        g.add_argument(f"--beta-{who}", type=float, help=f"value-function exponent of {who} (both signs)")
        g.add_argument(f"--gamma-{who}", type=float, help=f"probability-weighting exponent of {who} (both signs)")
        g.add_argument(f"--rational-{who}", action="store_true", help=f"make {who} fully rational")


def _search_args(p: argparse.ArgumentParser):
    d = SearchConfig()
    g = p.add_argument_group("pattern search")
    g.add_argument("--seed", type=int, default=d.rng_seed, help="search random seed")
    g.add_argument("--mesh", type=float, default=d.initial_mesh, help="initial mesh size")
    g.add_argument("--contraction", type=float, default=d.contraction_factor)
    g.add_argument("--min-mesh", type=float, default=d.min_mesh)
    g.add_argument("--max-evals", type=int, default=d.max_evals, help="evaluation budget per start point")
    g.add_argument("--restarts", type=int, default=d.restarts, help="random start points besides the vertices")


def _trunc_args(p: argparse.ArgumentParser):
    d = TruncationConfig()
    g = p.add_argument_group("series truncation")
    g.add_argument("--epsilon", type=float, default=d.epsilon)
    g.add_argument("--k-max", type=int, default=d.k_max)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavgame", description="Interdiction games on UAV delivery graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute an equilibrium")
    s.add_argument("--mode", required=True, choices=["se", "mse", "se-pt", "mse-pt"])
    s.add_argument("--instance", required=True)
    s.add_argument("--out", help="CSV output path (a JSON mirror is written alongside)")
    _pt_args(s)
    _search_args(s)
    _trunc_args(s)

    m = sub.add_parser("simulate", help="Monte Carlo estimate of the delivery time")
    m.add_argument("--instance", required=True)
    m.add_argument("--x-file", help="JSON object mapping node to interdiction probability")
    m.add_argument("--path", help='interior nodes of the path, e.g. "3,5,8" (default: shortest path)')
    m.add_argument("--trials", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--step-cap", type=int, default=10_000)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--out", help="JSON report path (default: stdout)")

    w = sub.add_parser("sweep", help="reproduce a parameter sweep")
    w.add_argument("--which", required=True, choices=["R", "gamma", "lambda"])
    w.add_argument("--instance", required=True)
    w.add_argument("--out", required=True, help="CSV output path (a JSON mirror is written alongside)")
    w.add_argument("--values", type=float, nargs="+", help="sweep values (default: the standard grid)")
    w.add_argument("--workers", type=int, default=1, help="sweep points solved in parallel processes")
    _pt_args(w)
    _search_args(w)
    _trunc_args(w)
    return parser


def _params(args, who: str) -> PTParams | None:
    if getattr(args, f"rational_{who}"):
        return PTParams.rational()
    fields = {"R": f"R_{who}", "lam": f"lambda_{who}", "beta": f"beta_{who}", "gamma": f"gamma_{who}"}
    given = {k: getattr(args, v) for k, v in fields.items() if getattr(args, v) is not None}
    return given or None


def _resolve(inst_path, args):
    inst = load_instance(inst_path)
    base = ExperimentConfig(inst_path, "se")
    default_I, default_U = resolve_params(inst, base)
    out = []
    for who, default in (("I", default_I), ("U", default_U)):
        given = _params(args, who)
        if isinstance(given, PTParams) or given is None:
            out.append(given)
            continue
        changes = {}
        if "R" in given:
            changes["R"] = given["R"]
        if "lam" in given:
            changes["lam"] = given["lam"]
        if "beta" in given:
            changes.update(beta_plus=given["beta"], beta_minus=given["beta"])
        if "gamma" in given:
            changes.update(gamma_plus=given["gamma"], gamma_minus=given["gamma"])
        out.append(default.replace(**changes))
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            x = None
            if args.x_file:
                with open(args.x_file) as fh:
                    x = json.load(fh)
            config = ExperimentConfig(args.instance, "simulate", args.out, x=x, path=args.path, trials=args.trials,
                                      seed=args.seed, step_cap=args.step_cap, workers=args.workers)
            report = run(config)[0]
            if not args.out:
                json.dump(report, sys.stdout, indent=2)
                sys.stdout.write("\n")
            else:
                print(f"mean {report['mean_delivery_time']:.6g} +/- {report['std_error']:.3g} "
                      f"(analytic {report['analytic_E']:.6g}) -> {args.out}")
            return 0

        params_I, params_U = _resolve(args.instance, args)
        search = SearchConfig(args.mesh, args.contraction, args.min_mesh, args.max_evals, args.restarts, args.seed)
        trunc = TruncationConfig(epsilon=args.epsilon, k_max=args.k_max)
        if args.command == "solve":
            config = ExperimentConfig(args.instance, args.mode, args.out, params_I, params_U, search=search, trunc=trunc)
        else:
            name = SWEEP_ALIASES[args.which]
            values = args.values or DEFAULT_SWEEP_VALUES[name]
            config = ExperimentConfig(args.instance, "sweep", args.out, params_I, params_U, sweep=(name, values),
                                      search=search, trunc=trunc, workers=args.workers)
        rows = run(config)
        for row in rows:
            print(json.dumps({k: fmt(v) for k, v in row.items() if not k.startswith(("trunc_", "search_"))}))
        return 0
    except Exception as exc:  # any failure: diagnostic and nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
