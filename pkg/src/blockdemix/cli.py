"""Command-line interface: generate, solve, experiment, analyze, plot.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DemixError
from .links import get_link

log = logging.getLogger("blockdemix")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


def _common(p):
    p.add_argument("--config", help="experiment config file (INI)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--algorithm", help="struct-dht, dht, dst or mf-struct-dht")
    p.add_argument("--link", help="identity, sigmoid, sin or sawtooth")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blockdemix", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance as JSON")
    _common(g)
    g.add_argument("--n", type=int, default=256)
    g.add_argument("--s", type=int, default=16)
    g.add_argument("--b", type=int, default=4)
    g.add_argument("--m", type=int, default=120)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--design", choices=("dense", "factored"), default="dense")
    g.add_argument("--family", choices=("gaussian", "rademacher"), default="gaussian")
    g.add_argument("--scale", type=float, help="dense design scale (default 1/sqrt(m))")
    g.add_argument("--k", type=int, default=4, help="diagonal blocks (factored)")
    g.add_argument("--T", type=float, default=20.0, help="range of D entries (factored)")
    g.add_argument("--phi", default="identity")
    g.add_argument("--psi", default="dct-like")

    s = sub.add_parser("solve", help="run one algorithm on an instance JSON")
    _common(s)
    s.add_argument("instance", help="instance JSON written by `generate`")
    s.add_argument("--eta", type=float, help="step size (default: data-derived)")
    s.add_argument("--max-iters", type=int, default=500)
    s.add_argument("--tol", type=float, default=1e-7)
    s.add_argument("--lam", type=float, default=0.0, help="DST threshold level")
    s.add_argument("--omega-max", type=float)
    s.add_argument("--resolution", type=float)
    s.add_argument("--refine", action="store_true", help="refine tone estimates off-grid")
    s.add_argument("--trace-csv", help="also write the iteration trace as CSV")

    e = sub.add_parser("experiment", help="run a Monte-Carlo sweep from a config file")
    _common(e)
    e.add_argument("--trials", type=int)
    e.add_argument("--timing", action="store_true", help="record wall time per trial")
    e.add_argument("--no-plots", action="store_true")

    a = sub.add_parser("analyze", help="SRSC/SRSS constants and rate report")
    _common(a)
    a.add_argument("instance")
    a.add_argument("--level-factor", type=int, default=6)
    a.add_argument("--trials", type=int, default=20)
    a.add_argument("--eta", type=float)

    p = sub.add_parser("plot", help="render SVG curves from a sweep CSV")
    _common(p)
    p.add_argument("csv")
    return ap


def _write_or_print(text: str, out):
    if out:
        path = Path(out)
        if path.is_dir():
            raise ConfigError(f"--out {out} is a directory; give a file path")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))


def cmd_generate(args):
    from .model import SignalConfig, instance_to_json, synthesize_instance
    from .operators import BasisPair, gen_factored, gen_subgaussian
    from .seeding import derive_seed

    seed = 0 if args.seed is None else args.seed
    link = get_link(args.link or "sigmoid")
    bases = BasisPair.from_kinds(args.n, args.phi, args.psi, derive_seed(seed, "bases"))
    design_seed = derive_seed(seed, "design")
    if args.design == "factored":
        if args.m % args.k:
            raise ConfigError(f"m={args.m} is not a multiple of k={args.k}")
        q = args.m // args.k
        design = gen_factored(args.k, q, args.n, args.T, args.family, design_seed)
        cfg = SignalConfig(args.n, args.s, args.b, args.m, q=q, k=args.k, noise_sigma=args.noise)
    else:
        design = gen_subgaussian(args.m, args.n, args.family, args.scale, design_seed)
        cfg = SignalConfig(args.n, args.s, args.b, args.m, noise_sigma=args.noise)
    inst = synthesize_instance(cfg, bases, design, link, seed)
    _write_or_print(instance_to_json(inst), args.out)


def _load_instance(path):
    from .model import instance_from_json

    return instance_from_json(Path(path).read_text())


def cmd_solve(args):
    from .matched_filter import ToneGrid, default_grid, mf_struct_dht
    from .model import normalized_error
    from .solvers import SolverParams, block, dht, dst, struct_dht

    inst = _load_instance(args.instance)
    link = get_link(args.link or inst.link_name)
    cfg = inst.config
    algorithm = args.algorithm or ("mf-struct-dht" if link.is_periodic else "struct-dht")
    params = SolverParams(block(cfg.s, cfg.b), args.eta, args.max_iters, args.tol,
                          lam=args.lam, seed=0 if args.seed is None else args.seed)
    if algorithm == "struct-dht":
        res = struct_dht(inst, inst.bases, link, params)
    elif algorithm == "dht":
        res = dht(inst, inst.bases, link, params)
    elif algorithm == "dst":
        res = dst(inst, inst.bases, link, params)
    elif algorithm == "mf-struct-dht":
        T = inst.design.T or 20.0
        g = default_grid(T)
        grid = ToneGrid(args.omega_max or g.omega_max, args.resolution or g.resolution)
        res = mf_struct_dht(inst.y, inst.design, inst.bases, link, grid, params,
                            refine=args.refine, truth=inst)
        res.extras.pop("tone", None)
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    res.extras["algorithm"] = algorithm
    if inst.beta is not None:
        res.extras["normalized_error"] = normalized_error(res.beta_hat, inst.beta)
    if args.trace_csv:
        Path(args.trace_csv).write_text(res.trace_csv())
    _write_or_print(res.to_json(), args.out)


def cmd_experiment(args):
    from .config import load_config, parse_config
    from .experiments import emit_outputs, run_sweep

    overrides = {"seed": args.seed, "output_dir": args.out, "link_name": args.link,
                 "trials": args.trials}
    if args.algorithm:
        overrides["algorithms"] = tuple(a.strip() for a in args.algorithm.split(","))
    if args.timing:
        overrides["timing"] = True
    config = load_config(args.config, **overrides) if args.config else parse_config("", **overrides)
    out = config.output_dir or "."
    log.info("sweep: %d algorithms x %d grid points x %d trials",
             len(config.algorithms), len(config.m_grid), config.trials)
    sweep = run_sweep(config, threads=args.threads, write=False)
    kinds = ["csv"] if args.no_plots or not sweep.rows else ["csv", "svg-success", "svg-error"]
    paths = emit_outputs(sweep, kinds, out)
    json_path = Path(out) / "sweep.json"
    json_path.write_text(sweep.to_json())
    print(json.dumps({"outputs": [str(p) for p in paths] + [str(json_path)],
                      "aggregates": sweep.aggregates}, indent=2))


def cmd_analyze(args):
    from .analysis import analyze_report

    inst = _load_instance(args.instance)
    link = get_link(args.link or inst.link_name)
    if link.is_periodic:
        raise ConfigError("analyze applies to aperiodic links")
    report = analyze_report(inst, inst.bases, link, args.level_factor, args.trials,
                            0 if args.seed is None else args.seed, args.eta)
    _write_or_print(json.dumps(report, indent=2, sort_keys=True), args.out)


def cmd_plot(args):
    from .experiments import emit_outputs, read_sweep_csv

    sweep = read_sweep_csv(args.csv)
    paths = emit_outputs(sweep, ("svg-success", "svg-error"), args.out or ".")
    print("\n".join(str(p) for p in paths))


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "analyze": cmd_analyze,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DemixError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_NUMERIC)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
