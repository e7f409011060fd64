"""Cost aggregates of the AD programs and the per-op overhead constants.

For a single-output program P over a priced dictionary:

    cost(backprop(P)) = sum_i cost(gd_i) + |pr(i)| (cost(+) + cost(x))
    cost(forprop(P))  = sum_i cost(gd_i) + p |pr(i)| cost(x) + p (|pr(i)| - 1) cost(+)

and the per-node constants

    omega_b = max_i (cost(gd_i) + 2 max(cost(+), cost(x)) |pr(i)|) / cost(g_i)
    omega_f = max_i (cost(gd_i) + p |pr(i)| cost(x) + p (|pr(i)| - 1) cost(+)) / cost(g_i)

bound the overhead ratios.  ``omega_b_sum`` is the tighter per-node form
with ``cost(+) + cost(x)`` in place of ``2 max(cost(+), cost(x))``; the two
coincide when additions and multiplications cost the same.

Everything is exact.  :class:`OpCounter` is the independent check: it is
charged by the engine for every op it actually runs.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import CostError, MultiOutputError
from .ops import DEFAULT_POLICY, Op
from .program import Program
from .schemes import CostScheme, cost as program_cost, unit_scheme


class OpCounter:
    """Accumulates the scheme cost of every operation executed by the engine."""

    def __init__(self, scheme: CostScheme):
        self.scheme = scheme
        self.total = Fraction(0)
        self.calls: Counter = Counter()
        self._g: dict = {}
        self._gd: dict = {}
        self._plus = scheme.plus
        self._times = scheme.times

    def charge_g(self, op: Op):
        price = self._g.get(op)
        if price is None:
            price = self._g[op] = self.scheme.g(op)
        self.total += price
        self.calls[op.key] += 1

    def charge_gd(self, op: Op):
        price = self._gd.get(op)
        if price is None:
            price = self._gd[op] = self.scheme.gd(op)
        self.total += price
        self.calls[op.key + "'"] += 1

    def charge_plus(self, n: int = 1):
        self.total += n * self._plus
        self.calls["+"] += n

    def charge_times(self, n: int = 1):
        self.total += n * self._times
        self.calls["x"] += n


@dataclass
class OpRow:
    """Per-op line of a report: ``count`` nodes sharing one price signature."""

    label: str
    count: int
    g: Fraction
    arity: int
    gd: Fraction
    omega_b: Fraction
    omega_b_sum: Fraction
    omega_f: Fraction
    omega_f_const: Fraction
    omega_f_slope: Fraction


@dataclass
class CostReport:
    p: int
    scheme: str
    cost_p: Fraction
    cost_backprop: Fraction
    cost_forprop: Fraction
    omega_b: Fraction
    omega_b_sum: Fraction
    omega_f: Fraction
    rows: list = field(default_factory=list)

    @property
    def ratio_b(self) -> Fraction:
        return self.cost_backprop / self.cost_p

    @property
    def ratio_f(self) -> Fraction:
        return self.cost_forprop / self.cost_p

    def to_dict(self) -> dict:
        from .formats import rat

        return {
            "p": self.p,
            "scheme": self.scheme,
            "cost_p": rat(self.cost_p),
            "cost_backprop": rat(self.cost_backprop),
            "cost_forprop": rat(self.cost_forprop),
            "ratio_b": rat(self.ratio_b),
            "ratio_f": rat(self.ratio_f),
            "omega_b": rat(self.omega_b),
            "omega_b_sum": rat(self.omega_b_sum),
            "omega_f": rat(self.omega_f),
            "per_op": [
                {
                    "op": r.label, "count": r.count, "g": rat(r.g), "pr": r.arity,
                    "gd": rat(r.gd), "omega_b": rat(r.omega_b), "omega_f": rat(r.omega_f),
                }
                for r in self.rows
            ],
        }

    def table(self) -> str:
        head = ("op", "count", "cost(g)", "|pr|", "cost(gd)", "omega_b", "omega_f")
        body = [
            (r.label, str(r.count), str(r.g), str(r.arity), str(r.gd), str(r.omega_b), str(r.omega_f))
            for r in self.rows
        ]
        lines = _align([head] + body)
        lines.append("")
        lines.append(f"cost(P) = {self.cost_p}   backprop = {self.cost_backprop}   forprop = {self.cost_forprop}")
        lines.append(
            f"ratio_b = {self.ratio_b} <= omega_b = {self.omega_b}   ratio_f = {self.ratio_f} <= omega_f = {self.omega_f}"
        )
        return "\n".join(lines)


def _align(rows) -> list:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return ["  ".join(cell.rjust(w) if c else cell.ljust(w) for c, (cell, w) in enumerate(zip(r, widths))) for r in rows]


def _signature_counts(program: Program) -> Counter:
    """Group nodes by (op or nested program, arity)."""
    counts: Counter = Counter()
    for node in program.nodes:
        counts[(node.op if node.op is not None else node.sub, node.arity)] += 1
    return counts


def _prices(head, scheme: CostScheme, cache: dict):
    if isinstance(head, Op):
        return scheme.g(head), scheme.gd(head), head.label()
    if head not in cache:
        # nested program: its call costs its own evaluation, its joint call its backward pass
        cache[head] = (program_cost(head, scheme), _aggregates(head, scheme, cache)[1])
    g, gd = cache[head]
    return g, gd, f"<{head.name or 'program'}>"


def _aggregates(program: Program, scheme: CostScheme, cache: dict):
    plus, times = scheme.plus, scheme.times
    p = program.p
    c_p = c_b = c_f = Fraction(0)
    for (head, k), n in _signature_counts(program).items():
        g, gd, _ = _prices(head, scheme, cache)
        c_p += n * g
        c_b += n * (gd + k * (plus + times))
        c_f += n * (gd + p * k * times + p * (k - 1) * plus)
    return c_p, c_b, c_f


def audit(program: Program, scheme: Optional[CostScheme] = None) -> CostReport:
    """Exact cost report for a single-output program."""
    scheme = scheme or unit_scheme()
    if program.q != 1:
        raise MultiOutputError(f"audit needs a single output, program has q={program.q}")
    plus, times = scheme.plus, scheme.times
    wide = 2 * max(plus, times)
    p = program.p
    cache: dict = {}
    rows = []
    c_p = c_b = c_f = Fraction(0)
    om_b = om_bs = om_f = None
    for (head, k), n in _signature_counts(program).items():
        g, gd, label = _prices(head, scheme, cache)
        if g == 0:
            raise CostError(f"{label} has zero cost; the overhead constants are undefined")
        c_p += n * g
        c_b += n * (gd + k * (plus + times))
        c_f += n * (gd + p * k * times + p * (k - 1) * plus)
        slope = (k * times + (k - 1) * plus) / g
        row = OpRow(
            label, n, g, k, gd,
            omega_b=(gd + wide * k) / g,
            omega_b_sum=(gd + k * (plus + times)) / g,
            omega_f=gd / g + p * slope,
            omega_f_const=gd / g,
            omega_f_slope=slope,
        )
        rows.append(row)
        om_b = row.omega_b if om_b is None else max(om_b, row.omega_b)
        om_bs = row.omega_b_sum if om_bs is None else max(om_bs, row.omega_b_sum)
        om_f = row.omega_f if om_f is None else max(om_f, row.omega_f)
    rows.sort(key=lambda r: (r.label, r.arity))
    return CostReport(p, _scheme_label(scheme), c_p, c_b, c_f, om_b, om_bs, om_f, rows)


def _scheme_label(scheme: CostScheme) -> str:
    if not scheme.params:
        return scheme.name
    from .formats import rat

    return scheme.name + ":" + ",".join(f"{k}={rat(v)}" for k, v in sorted(scheme.params.items()))


def closed_form(program: Program, mode: str, scheme: Optional[CostScheme] = None) -> Fraction:
    """Closed-form cost of ``eval``, ``backprop`` or ``forprop`` (identity seed)."""
    c_p, c_b, c_f = _aggregates(program, scheme or unit_scheme(), {})
    return {"eval": c_p, "backprop": c_b, "forprop": c_f}[mode]


def instrumented_run(program: Program, x, mode: str, scheme: Optional[CostScheme] = None,
                     policy=DEFAULT_POLICY, exact: Optional[bool] = None) -> Fraction:
    """Run the engine with an :class:`OpCounter` attached and return the charged total."""
    from . import engine

    scheme = scheme or unit_scheme()
    if exact is None:
        exact = program.rational
    counter = OpCounter(scheme)
    if mode == "eval":
        engine.evaluate(program, x, exact=exact, counter=counter)
    elif mode == "backprop":
        engine.backprop(program, x, policy, exact=exact, counter=counter)
    elif mode == "forprop":
        engine.forprop(program, x, policy, exact=exact, counter=counter)
    else:
        raise ValueError(f"mode must be eval, backprop or forprop, got {mode!r}")
    return counter.total


# ---------------------------------------------------------------- op tables

@dataclass
class TableRow:
    label: str
    g: object
    arity: object
    gd: object
    omega: object
    bound: Optional[object] = None


def _omega(g, k, gd, scheme_times):
    return (gd + 2 * scheme_times * k) / g


def _row(label, g, k, gd, times, bound=None):
    return TableRow(label, g, k, gd, _omega(g, k, gd, times), bound)


def op_table(preset: str = "unit", c_nonlin=None, c_relu=None, n=None) -> list:
    """Per-op overhead constants ``(cost(gd) + 2 cost(x) |pr|) / cost(g)``.

    ``unit`` gives the six basic rows.  ``weighted`` gives the same rows with
    ReLU replaced by xReLU; ``extended`` gives |.|, ELU, 3x3 max-pool and the
    two norms (arity ``n``).  Parameters may be numbers or sympy symbols; when
    omitted in the weighted presets, symbols ``c_nonlin``, ``c_relu``, ``n``
    are used so the rows come out as formulas.
    """
    if preset == "unit":
        s = unit_scheme()
        t = s.times
        rows = []
        for label, kind, k in (("(+,x)", "mul", 2), ("(+c,xc)", "mul-const", 1), ("log", "log", 1),
                               ("exp", "exp", 1), ("inv", "inv", 1), ("relu", "relu", 1)):
            op = Op(kind, k, Fraction(2) if kind == "mul-const" else None)
            rows.append(_row(label, s.g(op), k, s.gd(op), t))
        return rows

    import sympy

    cn = sympy.Symbol("c_nonlin", positive=True) if c_nonlin is None else _sym(c_nonlin)
    cr = sympy.Symbol("c_relu", nonnegative=True) if c_relu is None else _sym(c_relu)
    one = sympy.Integer(1)
    if preset == "weighted":
        return [
            _row("(+,x)", one, 2, one, one, 5),
            _row("(+c,xc)", one, 1, one, one, 3),
            _row("log", cn, 1, 2 * cn, one, 4),
            _row("exp", cn, 1, cn, one, 3),
            _row("inv", cn, 1, cn + 2, one, 5),
            _row("xrelu", 1 + cr, 2, 1 + cr, one, 5),
        ]
    if preset == "extended":
        k = sympy.Symbol("n", integer=True, positive=True) if n is None else sympy.Integer(n)
        elu = 2 + cr + cn
        pool = 153 + 8 * cr
        ninf = k + 2 * k * cr - 1
        n1 = k * (2 + cr) - 1
        return [
            _row("(+,x)", one, 2, one, one, 5),
            _row("abs", 1 + cr, 1, 1 + cr, one, 3),
            _row("elu", elu, 1, elu, one, 2),
            _row("max-pool-3x3", pool, 9, pool, one, sympy.Rational(112, 100)),
            _row("norm-inf", ninf, k, ninf, one, 3),
            _row("norm1", n1, k, n1, one, 2),
        ]
    raise ValueError(f"unknown preset {preset!r}")


def _sym(value):
    import sympy

    if isinstance(value, sympy.Basic):
        return value
    f = Fraction(value) if not isinstance(value, Fraction) else value
    return sympy.Rational(f.numerator, f.denominator)


@dataclass
class BoundCheck:
    label: str
    holds: bool
    proof: str
    counterexample: Optional[dict] = None


def check_bound(row: TableRow, domain: dict) -> BoundCheck:
    """Decide ``omega <= bound`` over a box domain ``{symbol: lower bound}``.

    The difference ``bound - omega`` is put over a common denominator after
    shifting every symbol to its lower bound (``s = lo + u`` with ``u >= 0``).
    If numerator and denominator have sign-consistent coefficients the bound
    holds on the whole domain.  Otherwise a small search along the domain
    looks for an explicit violation.
    """
    import sympy

    if row.bound is None:
        return BoundCheck(row.label, True, "no stated bound")
    diff = sympy.nsimplify(row.bound) - row.omega
    syms = sorted(diff.free_symbols, key=lambda s: s.name)
    shifted = {}
    fresh = []
    for s in syms:
        u = sympy.Symbol(f"u_{s.name}", nonnegative=True)
        fresh.append(u)
        shifted[s] = _sym(domain.get(s.name, 0)) + u
    expr = sympy.together(diff.subs(shifted))
    num, den = sympy.fraction(expr)
    if not fresh:
        ok = bool(sympy.simplify(expr) >= 0)
        return BoundCheck(row.label, ok, "constant")
    num_c = sympy.Poly(sympy.expand(num), *fresh).coeffs()
    den_c = sympy.Poly(sympy.expand(den), *fresh).coeffs()
    if all(c >= 0 for c in den_c) and all(c >= 0 for c in num_c):
        return BoundCheck(row.label, True, "nonnegative coefficients after shifting to the domain corner")
    if all(c <= 0 for c in den_c) and all(c <= 0 for c in num_c):
        return BoundCheck(row.label, True, "nonpositive numerator and denominator coefficients")
    import itertools

    grid = [sympy.Rational(0), sympy.Rational(1, 100), sympy.Rational(1, 10), sympy.Integer(1), sympy.Integer(10)]
    int_grid = [sympy.Integer(v) for v in (0, 1, 2, 10)]
    grids = [int_grid if s.is_integer else grid for s in syms]
    for point in itertools.product(*grids):
        sub = dict(zip(fresh, point))
        if den.subs(sub) == 0:
            continue
        if expr.subs(sub) < 0:
            at = {s.name: shifted[s].subs(sub) for s in syms}
            return BoundCheck(row.label, False, "explicit violation", {k: str(v) for k, v in at.items()})
    return BoundCheck(row.label, False, "undecided: mixed-sign coefficients and no violation found on the grid")
