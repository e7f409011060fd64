"""Cost schemes: nonnegative prices for each op and for its joint value+derivative call.

A scheme prices an op evaluation ``cost(g)`` and the joint evaluation of the
op with its selection derivative ``cost(gd)``.  Entries are either exact
rationals or callables of the arity (for k-ary ops whose price grows with k).
Program cost is additive over nodes; a nested program node costs what the
nested program costs, and its joint value+derivative call is priced as the
backward pass of the nested program (backprop chaining).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Union

from .errors import CostError, UnpricedOpError
from .ops import Op, to_fraction

Price = Union[Fraction, Callable[[int], Fraction]]


def _price(entry: Price, arity: int) -> Fraction:
    value = entry(arity) if callable(entry) else entry
    value = to_fraction(value)
    if value < 0:
        raise CostError(f"negative cost {value}")
    return value


@dataclass(frozen=True)
class CostScheme:
    name: str
    prim: Mapping[str, Price]
    derived: Mapping[str, Price]
    params: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        for key in ("add", "mul"):
            if key not in self.prim:
                raise CostError(f"scheme {self.name!r} must price {key}")
            if _price(self.prim[key], 2) <= 0:
                raise CostError(f"cost({key}) must be strictly positive")
        for table in (self.prim, self.derived):
            for key, entry in table.items():
                if not callable(entry) and to_fraction(entry) < 0:
                    raise CostError(f"negative cost for {key}")

    def g(self, op: Op) -> Fraction:
        try:
            return _price(self.prim[op.key], op.arity)
        except KeyError:
            raise UnpricedOpError(f"scheme {self.name!r} has no price for {op.key}") from None

    def gd(self, op: Op) -> Fraction:
        try:
            return _price(self.derived[op.key], op.arity)
        except KeyError:
            raise UnpricedOpError(f"scheme {self.name!r} has no derived price for {op.key}") from None

    @property
    def plus(self) -> Fraction:
        return _price(self.prim["add"], 2)

    @property
    def times(self) -> Fraction:
        return _price(self.prim["mul"], 2)

    def with_prices(self, key: str, g: Price, gd: Price) -> "CostScheme":
        """Copy with one extra (or overridden) entry, e.g. for a custom op."""
        prim = dict(self.prim)
        derived = dict(self.derived)
        prim[key], derived[key] = g, gd
        return CostScheme(self.name, prim, derived, self.params)


def _ceil_log2(k: int) -> int:
    return max(1, math.ceil(math.log2(k)))


def unit_scheme() -> CostScheme:
    """Every elementary operation costs 1; joint derivative costs per the op-by-op count.

    The ReLU dictionary and its derived dictionary are unit priced: cost(gd)
    is 1 for +, x, +c, xc, exp, relu; 2 for log (one extra inverse); 3 for
    inv (a square and a sign flip).  Extended ops are priced by their count
    of unit operations: k-1 comparisons for max/min, k*ceil(log2 k) for the
    median (sorting), 2k-1 for the norms; their derivative comes for free.
    """
    one = Fraction(1)
    prim = {
        "add": one, "sub": one, "mul": one, "add-const": one, "mul-const": one,
        "inv": one, "exp": one, "log": one, "relu": one,
        "abs": one, "leaky-relu": one, "elu": one, "mul-relu": Fraction(2),
        "max": lambda k: Fraction(k - 1),
        "min": lambda k: Fraction(k - 1),
        "median": lambda k: Fraction(k * _ceil_log2(k)),
        "norm1": lambda k: Fraction(2 * k - 1),
        "norm-inf": lambda k: Fraction(2 * k - 1),
    }
    derived = dict(prim)
    derived.update({"log": Fraction(2), "inv": Fraction(3)})
    return CostScheme("unit", prim, derived)


def weighted_scheme(c_nonlin=1, c_relu=1) -> CostScheme:
    """Smooth nonlinear ops cost ``c_nonlin`` (>= 1), a sign test costs ``c_relu`` (>= 0).

    ReLU, |.|, leaky-ReLU and xReLU are priced as one operation plus one sign
    test, ELU as 2 + c_relu + c_nonlin, pairwise comparisons in max/min/median
    as 1 + c_relu each, norms as in the extended cost table.
    """
    cn, cr = to_fraction(c_nonlin), to_fraction(c_relu)
    if cn < 1 or cr < 0:
        raise CostError("weighted scheme needs c_nonlin >= 1 and c_relu >= 0")
    one = Fraction(1)
    sign_op = 1 + cr
    prim = {
        "add": one, "sub": one, "mul": one, "add-const": one, "mul-const": one,
        "inv": cn, "exp": cn, "log": cn,
        "relu": sign_op, "abs": sign_op, "leaky-relu": sign_op, "mul-relu": sign_op,
        "elu": 2 + cr + cn,
        "max": lambda k: (k - 1) * sign_op,
        "min": lambda k: (k - 1) * sign_op,
        "median": lambda k: k * _ceil_log2(k) * sign_op,
        "norm1": lambda k: k * (2 + cr) - 1,
        "norm-inf": lambda k: k + 2 * k * cr - 1,
    }
    derived = dict(prim)
    derived.update({"log": 2 * cn, "inv": cn + 2})
    return CostScheme("weighted", prim, derived, {"c_nonlin": cn, "c_relu": cr})


def parse_scheme(text: str) -> CostScheme:
    """Parse ``unit`` or ``weighted:c_nonlin=2,c_relu=1/2``."""
    text = text.strip()
    if text == "unit":
        return unit_scheme()
    if text.startswith("weighted"):
        params = {}
        rest = text[len("weighted"):].lstrip(":")
        for item in filter(None, rest.split(",")):
            key, _, value = item.partition("=")
            if key.strip() not in ("c_nonlin", "c_relu"):
                raise ValueError(f"unknown scheme parameter {key!r}")
            params[key.strip()] = to_fraction(value)
        return weighted_scheme(**params)
    raise ValueError(f"unknown scheme {text!r}")


def cost(program, scheme: CostScheme) -> Fraction:
    """Additive program cost: sum of node costs, nested programs counted by their own cost."""
    total = Fraction(0)
    counts: dict = {}
    for node in program.nodes:
        if node.op is not None:
            counts[node.op] = counts.get(node.op, 0) + 1
        else:
            total += cost(node.sub, scheme)
    for op, n in counts.items():
        total += n * scheme.g(op)
    return total
