"""Command-line front end.

Subcommands::

    ncconv eval EXPR [--json | --csv] [--domain D] [--seed S]
    ncconv invert EXPR --grid A:B:N [--eps-ladder E1,E2,...] [--domain D]
    ncconv verify [--suite diracs|oracles|associativity|all] [--seed S]
    ncconv model EXPR --dump
    ncconv transform EXPR --at RE,IM --which G|F|psi|K|W [--domain D]

Exit codes: 0 success, 2 parse or domain error, 3 convergence failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import convolutions as conv
from .errors import (ConvergenceError, DomainError, NoSolutionError, ParseError, PoleError,
                     PreconditionError)
from .expr import Binary, concrete_op, evaluate, infer_domain, parse_expression
from .measures import AtomicMeasure, to_json
from .operator_models import MODEL_FOR_OP, model_to_json
from .transforms import DEFAULT_LADDER, DEFAULT_SEED, handle_of, stieltjes_invert
from .verification import SUITES, run_suite

EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_VERIFY = 4

MODEL_OPS = {
    "mono_add": "mono_add",
    "bool_add": "bool_add",
    "mono_mult_pos": "mono_mult",
    "mono_mult_alt": "mono_mult_alt",
    "bool_mult_new": "bool_mult_new",
    "mono_mult_circle": "mono_mult_circle",
    "bool_mult_circle": "bool_mult_circle",
}


def fmt(x):
    """17 significant digits, no negative zero."""
    x = float(x)
    return format(0.0 if x == 0 else x, ".17g")


def fmt_complex(z):
    z = complex(z)
    im = 0.0 if z.imag == 0 else z.imag
    sign = "-" if im < 0 else "+"
    return f"{fmt(z.real)}{sign}{fmt(abs(im))}i"


def resolve_seed(arg):
    if arg is not None:
        return arg
    env = os.environ.get("NCCONV_SEED")
    return int(env, 0) if env else DEFAULT_SEED


def _load(args):
    node = parse_expression(args.expr)
    domain = infer_domain(node, getattr(args, "domain", None))
    return node, domain


def _atoms_csv(mu):
    lines = ["x,w"] + [f"{fmt(x)},{fmt(w)}" for x, w in mu]
    return "\n".join(lines)


def cmd_eval(args, out):
    node, domain = _load(args)
    value = evaluate(node, domain, seed=resolve_seed(args.seed))
    if isinstance(value, conv.Undefined):
        out.write(str(value) + "\n")
        return 0
    if isinstance(value, AtomicMeasure):
        out.write((to_json(value) if args.json else _atoms_csv(value)) + "\n")
        return 0
    out.write(f"# transform-level result on the {domain.value} domain; "
              "use 'invert' to tabulate it\n")
    return 0


def parse_grid(text):
    try:
        a, b, n = text.split(":")
        grid = np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise DomainError(f"grid must look like A:B:N, got {text!r}") from None
    if len(grid) < 2 or grid[-1] <= grid[0]:
        raise DomainError("grid needs N >= 2 and A < B")
    return grid


def parse_ladder(text):
    if text is None:
        return DEFAULT_LADDER
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise DomainError(f"bad eps ladder {text!r}") from None


def cmd_invert(args, out):
    node, domain = _load(args)
    value = evaluate(node, domain, seed=resolve_seed(args.seed))
    if isinstance(value, conv.Undefined):
        out.write(str(value) + "\n")
        return 0
    dens = stieltjes_invert(handle_of(value), parse_grid(args.grid), parse_ladder(args.eps_ladder))
    rows = ["x,density"] + [f"{fmt(x)},{fmt(d)}" for x, d in zip(dens.grid, dens.density)]
    atoms = [{"x": float(x), "w": float(w)} for x, w in zip(dens.atom_positions, dens.atom_weights)]
    rows.append("# atoms: " + json.dumps(atoms))
    out.write("\n".join(rows) + "\n")
    return 0


def cmd_verify(args, out):
    checks = run_suite(args.suite, seed=resolve_seed(args.seed))
    for c in checks:
        out.write(c.line() + "\n")
    failed = sum(not c.passed for c in checks)
    out.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return EXIT_VERIFY if failed else 0


def cmd_model(args, out):
    node, domain = _load(args)
    if not isinstance(node, Binary):
        raise DomainError("model needs a single convolution, e.g. mono_add(dirac(1), bern(0.5,1,-1))")
    op = concrete_op(node.op, domain)
    if op not in MODEL_OPS:
        raise DomainError(f"{op} has no finite operator model")
    seed = resolve_seed(args.seed)
    lhs, rhs = evaluate(node.lhs, domain, seed), evaluate(node.rhs, domain, seed)
    if not (isinstance(lhs, AtomicMeasure) and isinstance(rhs, AtomicMeasure)):
        raise DomainError("operator models need atomic operands")
    build, shifted = MODEL_FOR_OP[MODEL_OPS[op]]
    out.write(model_to_json(build(lhs, rhs, shifted=shifted)) + "\n")
    return 0


def cmd_transform(args, out):
    node, domain = _load(args)
    value = evaluate(node, domain, seed=resolve_seed(args.seed))
    if isinstance(value, conv.Undefined):
        out.write(str(value) + "\n")
        return 0
    try:
        re_, im_ = (float(t) for t in args.at.split(","))
    except ValueError:
        raise DomainError(f"--at must look like RE,IM, got {args.at!r}") from None
    out.write(fmt_complex(handle_of(value).evaluate(args.which, complex(re_, im_))) + "\n")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ncconv",
                                description="Free, monotone and boolean convolutions of measures.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("expr", help="measure expression")
        sp.add_argument("--domain", choices=["real", "positive", "circle"],
                        help="override the inferred domain")
        if seed:
            sp.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                            help="sampling seed (default NCCONV_SEED or 0xC0FFEE)")

    sp = sub.add_parser("eval", help="evaluate an expression to atoms")
    common(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true", help="emit measure JSON")
    g.add_argument("--csv", action="store_true", help="emit x,w CSV (default)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("invert", help="tabulate the density on a grid")
    common(sp)
    sp.add_argument("--grid", required=True, help="A:B:N")
    sp.add_argument("--eps-ladder", default=None, help="comma-separated, e.g. 1e-2,1e-3,1e-4")
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("verify", help="run self-check suites")
    sp.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    sp.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("model", help="operator model of a single convolution")
    common(sp)
    sp.add_argument("--dump", action="store_true", required=True, help="print the model as JSON")
    sp.set_defaults(func=cmd_model)

    sp = sub.add_parser("transform", help="evaluate G, F, psi, K or W at a point")
    common(sp)
    sp.add_argument("--at", required=True, help="RE,IM")
    sp.add_argument("--which", required=True, choices=["G", "F", "psi", "K", "W"])
    sp.set_defaults(func=cmd_transform)
    return p


def run_command(argv, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    try:
        return args.func(args, out)
    except ParseError as exc:
        err.write(f"parse error: {exc}\n")
        return EXIT_INPUT
    except (DomainError, PreconditionError, PoleError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (ConvergenceError, NoSolutionError) as exc:
        err.write(f"convergence failure: {exc}\n")
        return EXIT_CONVERGENCE


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
