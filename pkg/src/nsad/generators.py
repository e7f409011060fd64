"""Random instances for tests and experiment scripts.

Program generators optionally run interval arithmetic over the input box
while they build, so every log/inv argument is provably in its domain, exp
stays small, and no node can blow up.  An op that would break those
guarantees is swapped for a harmless one.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Optional, Sequence

from .hardness import CnfFormula
from .ops import make_op
from .program import Node, Program, build_program
from .relunet import ReluNetwork

RELU_DICT = ("add", "mul", "add-const", "mul-const", "inv", "exp", "log", "relu")
D0 = ("add", "sub", "relu")

_LIMIT = 1e3


class _Box:
    """Closed interval [lo, hi]."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo, self.hi = lo, hi

    def mag(self):
        return max(abs(self.lo), abs(self.hi))


def _interval(kind: str, const, boxes) -> Optional[_Box]:
    a = boxes[0]
    if kind == "add":
        return _Box(a.lo + boxes[1].lo, a.hi + boxes[1].hi)
    if kind == "sub":
        return _Box(a.lo - boxes[1].hi, a.hi - boxes[1].lo)
    if kind == "mul":
        b = boxes[1]
        prods = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
        return _Box(min(prods), max(prods))
    if kind == "add-const":
        return _Box(a.lo + const, a.hi + const)
    if kind == "mul-const":
        ends = (a.lo * const, a.hi * const)
        return _Box(min(ends), max(ends))
    if kind == "relu":
        return _Box(max(a.lo, 0.0), max(a.hi, 0.0))
    if kind == "inv":
        if a.lo >= 0.5:
            return _Box(1 / a.hi, 1 / a.lo)
        if a.hi <= -0.5:
            return _Box(1 / a.lo, 1 / a.hi)
        return None
    if kind == "log":
        if a.lo >= 0.5:
            return _Box(math.log(a.lo), math.log(a.hi))
        return None
    if kind == "exp":
        if a.hi <= 4:
            return _Box(math.exp(a.lo), math.exp(a.hi))
        return None
    raise ValueError(kind)


_CONSTS = (Fraction(1, 2), Fraction(-1, 2), Fraction(2), Fraction(-1), Fraction(3, 4), Fraction(1))


def random_program(
    rng: random.Random,
    n_nodes: int,
    p: int,
    ops: Sequence[str] = RELU_DICT,
    tame: bool = True,
    box: float = 2.0,
    use_all_inputs: bool = False,
    recent: int = 8,
) -> Program:
    """Random single-output program with ``n_nodes`` computation nodes.

    Arguments are drawn mostly from the ``recent`` latest slots so programs
    have depth.  With ``tame`` the inputs are assumed to lie in [-box, box]
    and interval arithmetic keeps every node bounded and in its domain.
    """
    nodes: list = []
    boxes = [_Box(-box, box)] * p
    pending = list(range(1, p + 1)) if use_all_inputs else []
    rng.shuffle(pending)
    for offset in range(n_nodes):
        m = p + offset

        def pick():
            if pending:
                return pending.pop()
            if rng.random() < 0.7:
                return rng.randint(max(1, m - recent + 1), m)
            return rng.randint(1, m)

        kind = rng.choice(ops)
        arity = 2 if kind in ("add", "sub", "mul") else 1
        args = [pick() for _ in range(arity)]
        const = rng.choice(_CONSTS) if kind in ("add-const", "mul-const") else None
        if tame:
            out = _interval(kind, None if const is None else float(const), [boxes[a - 1] for a in args])
            if out is None or out.mag() > _LIMIT:
                kind, const = _fallback(ops, rng)
                arity = 2 if kind in ("add", "sub") else 1
                args = (args + [pick()])[:arity]
                out = _interval(kind, None if const is None else float(const), [boxes[a - 1] for a in args])
                if out.mag() > _LIMIT:
                    kind, const, args = "mul-const", Fraction(1, 2), args[:1]
                    out = _interval(kind, 0.5, [boxes[args[0] - 1]])
            boxes.append(out)
        nodes.append(Node(tuple(args), op=make_op(kind, const=const)))
    return build_program(nodes, p)


def _fallback(ops, rng):
    if "mul-const" in ops:
        return "mul-const", Fraction(1, 2)
    if "relu" in ops:
        return "relu", None
    return "sub", None


def random_relu_program(rng: random.Random, n_nodes: int, p: int, tame: bool = False) -> Program:
    """Program over the ReLU dictionary; structure only unless ``tame``."""
    return random_program(rng, n_nodes, p, RELU_DICT, tame=tame)


def random_d0_program(rng: random.Random, n_nodes: int, p: int, use_all_inputs: bool = True) -> Program:
    """Program over {+, -, ReLU}."""
    n_nodes = max(n_nodes, (p + 1) // 2)
    return random_program(rng, n_nodes, p, D0, tame=False, use_all_inputs=use_all_inputs)


def random_nested_program(rng: random.Random, p: int, depth: int = 2, n_nodes: int = 6,
                          ops: Sequence[str] = ("add", "sub", "mul", "relu", "mul-const")) -> Program:
    """Program whose nodes sometimes call smaller random programs (nested ``depth`` levels)."""
    if depth <= 1:
        return random_program(rng, n_nodes, p, ops, tame=True)
    subs = [random_nested_program(rng, k, depth - 1, max(2, n_nodes // 2), ops) for k in (1, 2, 3)]
    nodes = []
    for offset in range(n_nodes):
        m = p + offset
        if rng.random() < 0.4:
            sub = rng.choice(subs)
            nodes.append(Node(tuple(rng.randint(1, m) for _ in range(sub.p)), sub=sub))
        else:
            kind = rng.choice([k for k in ops if k != "mul"])
            arity = 2 if kind in ("add", "sub") else 1
            const = Fraction(1, 2) if kind == "mul-const" else None
            nodes.append(Node(tuple(rng.randint(1, m) for _ in range(arity)), op=make_op(kind, const=const)))
    return build_program(nodes, p)


def random_net(
    rng: random.Random,
    p: int,
    widths: Sequence[int],
    relu_prob: float = 0.7,
    weights: Sequence = (-1, 0, 1),
) -> ReluNetwork:
    """Single-output network with the given hidden widths and weights drawn from ``weights``."""
    dims = [p] + list(widths) + [1]
    mats = [[[Fraction(rng.choice(weights)) for _ in range(dims[i])] for _ in range(dims[i + 1])]
            for i in range(len(dims) - 1)]
    masks = [[int(rng.random() < relu_prob) for _ in range(w)] for w in widths]
    return ReluNetwork(tuple(mats), tuple(masks))


def random_cnf(rng: random.Random, p: int, n: int) -> CnfFormula:
    """n clauses of three literals over variables 1..p (repeats within a clause allowed)."""
    clauses = [tuple((rng.randint(1, p), rng.random() < 0.5) for _ in range(3)) for _ in range(n)]
    return CnfFormula(p, tuple(clauses))


def random_point(rng: random.Random, p: int, box: float = 2.0) -> list:
    return [rng.uniform(-box, box) for _ in range(p)]


def random_rational_point(rng: random.Random, p: int, num: int = 20, den: int = 7) -> list:
    return [Fraction(rng.randint(-num, num), rng.randint(1, den)) for _ in range(p)]


__all__ = [
    "D0", "RELU_DICT", "random_program", "random_relu_program", "random_d0_program",
    "random_nested_program", "random_net", "random_cnf", "random_point", "random_rational_point",
]
