"""Command line entry point: ``sagitta <experiment> [flags]``.

Exit codes: 0 all pass (or inconclusive), 1 any fail, 2 usage or invalid
argument, 3 numerical-domain error.
"""

import argparse
import sys
import time

from ..errors import InvalidArgumentError, NumericalDomainError, SagittaError
from ..spaces import (
    QuotientSpec,
    glued_quotient_metric,
    sample_projective,
    sample_round_lens,
    sample_sphere,
)
from . import fms
from .config import DEFAULT_SEED, EXPERIMENTS, load_file, resolve
from .experiments import run
from .report import FAIL, dumps

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

# flag -> ExperimentConfig field
FLAGS = {
    "n": int,
    "k": float,
    "h": float,
    "r": float,
    "points": int,
    "mc": int,
    "seed": int,
    "tau": float,
    "cases": int,
    "m": int,
    "m_max": int,
    "instance": str,
    "levels": int,
    "connect": float,
    "matrix": str,
}


def _weights(text):
    try:
        return [int(w) for w in text.split(",") if w.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must be comma separated integers, got {text!r}")


def _add_experiment(sub, name):
    p = sub.add_parser(name, help=f"run the {name} experiment")
    for field, typ in FLAGS.items():
        p.add_argument("--" + field.replace("_", "-"), dest=field, type=typ, default=None)
    p.add_argument("--weights", type=_weights, default=None, help="comma separated rotation weights")
    p.add_argument("--config", default=None, help="JSON file of config values")
    p.add_argument("--out", dest="output", default=None, help="report path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--timing", action="store_true", default=None, help="record wall time in the report")


def build_parser():
    parser = argparse.ArgumentParser(prog="sagitta", description="Curvature comparison verification suite.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_experiment(sub, name)
    g = sub.add_parser("generate", help="write a sampled instance as an FMS v1 distance matrix")
    g.add_argument("--kind", required=True, choices=("sphere", "projective", "round_lens", "glued_lens"))
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--k", type=float, default=1.0)
    g.add_argument("--points", type=int, default=500)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--weights", type=_weights, default=None)
    g.add_argument("--connect", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--out", required=True)
    return parser


def _generate(args):
    w = tuple(args.weights) if args.weights else None
    if args.kind == "sphere":
        X = sample_sphere(args.n, args.k, args.points, args.seed)
    elif args.kind == "projective":
        X = sample_projective(args.n, args.k, args.points, args.seed)
    elif args.kind == "round_lens":
        X = sample_round_lens(QuotientSpec("round_lens", args.n, args.k, m=args.m, weights=w), args.points, args.seed)
    else:
        spec = QuotientSpec("glued_lens", args.n, args.k, m=args.m, weights=w)
        X = glued_quotient_metric(spec, args.points, args.connect, args.seed)
    fms.write(args.out, X)
    return EXIT_OK


def _experiment(args):
    overrides = {f: getattr(args, f) for f in FLAGS}
    overrides.update(weights=args.weights, output=args.output, format=args.format, timing=args.timing)
    file_values = load_file(args.config) if args.config else None
    cfg = resolve(args.command, file_values, overrides)
    start = time.perf_counter()
    report = run(cfg)
    if cfg.timing:
        report["wall_time"] = time.perf_counter() - start
    text = dumps(report, cfg.format)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    s = report["summary"]
    print(f"{cfg.experiment}: {s['pass']} pass, {s['fail']} fail, {s['inconclusive']} inconclusive",
          file=sys.stderr)
    return EXIT_FAIL if s["verdict"] == FAIL else EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "generate":
            return _generate(args)
        return _experiment(args)
    except NumericalDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InvalidArgumentError, SagittaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
