"""Command-line front end.

Every command prints one JSON document on stdout.  Exit codes: 0 success,
1 domain failure (DomainError, exceeded budget, failed check), 2 bad input
(unparseable file, wrong shape, unsupported op).  Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .audit import audit, op_table
from . import engine, enumeration, formats, hardness, relunet
from .directional import build_directional_instance, directional_check
from .errors import (
    BudgetExceeded,
    ConstraintViolated,
    DomainError,
    FormatError,
    NsadError,
    ProgramError,
)
from .ops import SelectionPolicy
from .schemes import parse_scheme

log = logging.getLogger("nsad")


class InputError(Exception):
    pass


def _policy(text: str) -> SelectionPolicy:
    if not text:
        return SelectionPolicy()
    kw = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        if key == "relu0":
            kw["relu_at_zero"] = formats.parse_rat(value)
        elif key == "abs0":
            kw["abs_at_zero"] = formats.parse_rat(value)
        else:
            raise InputError(f"unknown policy key {key!r} (use relu0=, abs0=)")
    return SelectionPolicy(**kw)


def _exact(args, program) -> bool:
    if args.arith == "auto":
        return program.rational
    return args.arith == "exact"


def _vector(text: str, exact: bool):
    vec = formats.parse_vector(text)
    return vec if exact else [float(v) for v in vec]


def _out(value):
    return formats.rat(value) if isinstance(value, Fraction) else value


def cmd_eval(args) -> dict:
    program = formats.load_program(args.file)
    exact = _exact(args, program)
    y = engine.evaluate(program, _vector(args.x, exact), exact=exact)
    return {"y": [_out(v) for v in y]}


def cmd_grad(args) -> dict:
    program = formats.load_program(args.file)
    exact = _exact(args, program)
    x = _vector(args.x, exact)
    policy = _policy(args.policy)
    scheme = parse_scheme(args.scheme)
    if args.mode == "fwd":
        value, grad = engine.forprop(program, x, policy, exact=exact)
    else:
        value, grad = engine.backprop(program, x, policy, exact=exact)
    return {
        "value": _out(value),
        "grad": [_out(g) for g in grad],
        "cost_report": audit(program, scheme).to_dict(),
    }


def cmd_cost(args) -> dict:
    if args.what == "table":
        return _cost_table(args)
    if not args.file:
        raise InputError("cost audit needs a program file")
    program = formats.load_program(args.file)
    report = audit(program, parse_scheme(args.scheme))
    if args.text:
        print(report.table(), file=sys.stderr)
    return report.to_dict()


def _cost_table(args) -> dict:
    text = args.scheme.strip()
    if text == "unit":
        rows = op_table("unit")
        return {"scheme": "unit", "rows": [{"op": r.label, "omega": formats.rat(r.omega)} for r in rows]}
    scheme = parse_scheme(text)
    cn, cr = scheme.params["c_nonlin"], scheme.params["c_relu"]
    rows = op_table("weighted", cn, cr) + op_table("extended", cn, cr, n=args.n)[1:]
    out = []
    for r in rows:
        omega = Fraction(int(r.omega.p), int(r.omega.q))
        bound = None if r.bound is None else Fraction(str(r.bound))
        out.append({
            "op": r.label, "omega": formats.rat(omega),
            "bound": None if bound is None else formats.rat(bound),
            "within_bound": None if bound is None else omega <= bound,
        })
    return {"scheme": text, "n": args.n, "rows": out}


def cmd_convert(args) -> dict:
    obj = formats.loads(Path(args.file).read_text())
    if isinstance(obj, dict) and "mats" in obj:
        net = formats.net_from_dict(obj)
        program = relunet.program_from_net(net)
        result = {"kind": "program", "program": formats.program_to_dicts(program)[0]}
    else:
        program = formats.load_program(args.file)
        net = relunet.net_from_program(program)
        result = {"kind": "net", "net": formats.net_to_dict(net), "size": net.size}
    if args.out:
        body = result["program"] if result["kind"] == "program" else result["net"]
        Path(args.out).write_text(formats.dumps(body) + "\n")
    return result


def cmd_sat(args) -> dict:
    try:
        cnf = hardness.parse_dimacs(Path(args.file).read_text())
    except OSError as err:
        raise FormatError(str(err)) from None
    net = hardness.encode_3sat(cnf)
    if args.action == "encode":
        if args.out:
            Path(args.out).write_text(formats.net_to_json(net) + "\n")
        return {"net": formats.net_to_dict(net), "p": cnf.p, "clauses": cnf.n, "relu_depth": net.relu_depth}
    witness = hardness.sign_vector_search(net, jobs=args.jobs)
    out = {"satisfiable": witness is not None}
    if witness is not None:
        out["witness"] = witness
    return out


def cmd_enum(args) -> dict:
    net = formats.load_net(args.file)
    x = formats.parse_vector(args.x) if args.x else [Fraction(0)] * net.p
    if len(x) == 1 and net.p > 1:
        x = x * net.p
    verdict = enumeration.decide_singleton(net, x, seed=args.seed)
    out = verdict.to_dict()
    if args.seed is not None and "seed" not in out and not verdict.singleton:
        out["seed"] = args.seed
    return out


def cmd_ddemo(args) -> dict:
    inst = build_directional_instance(args.p, seed=args.seed)
    report = directional_check(inst)
    out = report.to_dict()
    if not report.ok:
        raise ConstraintViolated(formats.dumps(out))
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsad", description="Nonsmooth AD programs, cost audits and ReLU-network gadgets.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_arith(p):
        p.add_argument("--arith", choices=("auto", "float", "exact"), default="auto",
                       help="exact rationals, floats, or auto (exact when every op is rational)")

    p = sub.add_parser("eval", help="evaluate a program")
    p.add_argument("file")
    p.add_argument("--x", required=True, help="comma separated inputs, rationals like 3/7 allowed")
    add_arith(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grad", help="value and conservative-gradient element, with its cost audit")
    p.add_argument("file")
    p.add_argument("--x", required=True)
    p.add_argument("--mode", choices=("fwd", "bwd"), default="bwd")
    p.add_argument("--policy", default="", help="relu0=<v in [0,1]>,abs0=<v in [-1,1]>")
    p.add_argument("--scheme", default="unit")
    add_arith(p)
    p.set_defaults(func=cmd_grad)

    p = sub.add_parser("cost", help="cost audit of a program, or the per-op constant tables")
    p.add_argument("what", choices=("audit", "table"))
    p.add_argument("file", nargs="?")
    p.add_argument("--scheme", default="unit")
    p.add_argument("--n", type=int, default=4, help="arity used for the norm rows of the table")
    p.add_argument("--text", action="store_true", help="also print an aligned table on stderr")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("convert", help="program <-> network (direction chosen from the file)")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("sat", help="encode a DIMACS 3-CNF as a network, or check it by sign sweep")
    p.add_argument("action", choices=("encode", "check"))
    p.add_argument("file")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sat)

    p = sub.add_parser("enum", help="decide whether the autodiff conservative gradient is a singleton")
    p.add_argument("file")
    p.add_argument("--x", default="", help="point (default 0)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_enum)

    p = sub.add_parser("ddemo", help="directional-derivative construction and its checks")
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ddemo)
    return ap


_INPUT_ERRORS = (InputError, FormatError, ProgramError, ValueError, KeyError, TypeError, OSError)
_DOMAIN_ERRORS = (DomainError, BudgetExceeded, ConstraintViolated)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        payload = args.func(args)
    except _DOMAIN_ERRORS as err:
        error = {"error": type(err).__name__, "message": str(err)}
        if getattr(err, "node", None) is not None:
            error["node"] = err.node
        print(f"nsad: {type(err).__name__}: {err}", file=sys.stderr)
        print(formats.dumps(error))
        return 1
    except (NsadError, *_INPUT_ERRORS) as err:
        print(f"nsad: {type(err).__name__}: {err}", file=sys.stderr)
        print(formats.dumps({"error": type(err).__name__, "message": str(err)}))
        return 2
    print(formats.dumps(payload))
    return 0


if __name__ == "__main__":
    sys.exit(main())
