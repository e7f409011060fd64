"""Evaluation and forward/backward propagation of conservative-gradient elements.

``evaluate`` runs the plain evaluation loop.  ``evaluate_with_derivatives``
replaces each node call by the joint value+derivative call and records the
local derivative vector ``w_i`` of every node in a :class:`Trace`.
``backprop`` and ``forprop`` consume that trace: the backward sweep
accumulates ``v[j] += v[t] * w_t[j]`` from the output down to the inputs; the
forward sweep pushes seed tangents from the inputs up.

Two numeric backends share the code: exact ``Fraction`` arithmetic
(``exact=True``, rational ops only) and floats.  With floats, the sweeps by
default accumulate the float-valued ``w_i`` exactly and round once at the
end (``accumulate="exact"``), which makes the forward and backward results
bit-identical.  ``accumulate="float"`` gives the plain floating sweep.

An optional ``counter`` (see :class:`nsad.audit.OpCounter`) is charged for
every dictionary operation the sweeps execute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import DimensionError, DomainError, MultiOutputError
from .ops import DEFAULT_POLICY, SelectionPolicy, apply, derivative, kink_distance, to_fraction
from .program import Program


@dataclass
class Trace:
    """Values ``x_1..x_m`` and local derivatives ``w_{p+1}..w_m`` of one run."""

    program: Program
    values: list
    derivs: list
    exact: bool

    def x(self, i: int):
        return self.values[i - 1]

    def w(self, i: int) -> tuple:
        return self.derivs[i - self.program.p - 1]

    @property
    def output(self):
        return self.values[-1]


def _inputs(program: Program, x: Sequence, exact: bool) -> list:
    if len(x) != program.p:
        raise DimensionError(f"program takes {program.p} inputs, got {len(x)}")
    if exact:
        return [to_fraction(v) for v in x]
    return [float(v) for v in x]


def _call(node, args, exact, counter, node_index):
    try:
        if node.op is not None:
            if counter is not None:
                counter.charge_g(node.op)
            return apply(node.op, args, exact)
        return _run(node.sub, list(args), exact, counter)[-1]
    except DomainError as err:
        if err.node is None:
            raise DomainError(str(err), node=node_index) from None
        raise


def _run(program: Program, values: list, exact: bool, counter) -> list:
    for i, node in enumerate(program.nodes, start=program.p + 1):
        values.append(_call(node, [values[j - 1] for j in node.args], exact, counter, i))
    return values


def evaluate(program: Program, x: Sequence, *, exact: bool = False, counter=None) -> list:
    """Outputs ``(x_j)`` for ``j = m-q+1..m``. Raises DomainError carrying the node index."""
    values = _run(program, _inputs(program, x, exact), exact, counter)
    return values[program.m - program.q:]


def evaluate_with_derivatives(
    program: Program,
    x: Sequence,
    policy: SelectionPolicy = DEFAULT_POLICY,
    *,
    exact: bool = False,
    counter=None,
) -> Trace:
    values = _inputs(program, x, exact)
    derivs = []
    for i, node in enumerate(program.nodes, start=program.p + 1):
        args = [values[j - 1] for j in node.args]
        try:
            if node.op is not None:
                if counter is not None:
                    counter.charge_gd(node.op)
                val = apply(node.op, args, exact)
                w = derivative(node.op, args, val, policy, exact)
            else:
                # the joint call of a nested program is its own backward pass
                val, w = backprop(node.sub, args, policy, exact=exact, counter=counter)
        except DomainError as err:
            raise DomainError(str(err).split(": ", 1)[-1], node=i) from None
        values.append(val)
        derivs.append(tuple(w))
    return Trace(program, values, derivs, exact)


def _single_output(program: Program):
    if program.q != 1:
        raise MultiOutputError(f"derivatives need a single output, program has q={program.q}")


def _numeric(trace: Trace, accumulate: str):
    if accumulate not in ("exact", "float"):
        raise ValueError(f"accumulate must be 'exact' or 'float', got {accumulate!r}")
    if trace.exact or accumulate == "float":
        return (lambda t: t), (Fraction(0) if trace.exact else 0.0)
    return Fraction, Fraction(0)


def _finish(values, trace: Trace):
    return list(values) if trace.exact else [float(v) for v in values]


def backprop(
    program: Program,
    x: Sequence,
    policy: SelectionPolicy = DEFAULT_POLICY,
    *,
    exact: bool = False,
    accumulate: str = "exact",
    counter=None,
    trace: Optional[Trace] = None,
):
    """Backward sweep. Returns ``(value, grad)`` with ``grad`` of length p."""
    _single_output(program)
    if trace is None:
        trace = evaluate_with_derivatives(program, x, policy, exact=exact, counter=counter)
    conv, zero = _numeric(trace, accumulate)
    m, p = program.m, program.p
    v = [zero] * m
    v[m - 1] = zero + 1
    for t in range(m, p, -1):
        w = trace.derivs[t - p - 1]
        args = program.nodes[t - p - 1].args
        if counter is not None:
            counter.charge_plus(len(args))
            counter.charge_times(len(args))
        vt = v[t - 1]
        if vt == 0:
            continue
        for j, wj in zip(args, w):
            v[j - 1] += vt * conv(wj)
    return trace.output, _finish(v[:p], trace)


def _seed_rows(seed, p: int, conv, zero):
    if seed is None:
        return [[zero + (1 if r == c else 0) for c in range(p)] for r in range(p)]
    rows = [list(r) for r in seed]
    if len(rows) != p:
        raise DimensionError(f"seed must have p={p} rows, got {len(rows)}")
    k = len(rows[0]) if rows else 0
    if any(len(r) != k for r in rows):
        raise DimensionError("ragged seed matrix")
    return [[zero + conv(v) for v in r] for r in rows]


def forprop(
    program: Program,
    x: Sequence,
    policy: SelectionPolicy = DEFAULT_POLICY,
    seed=None,
    *,
    exact: bool = False,
    accumulate: str = "exact",
    counter=None,
    trace: Optional[Trace] = None,
):
    """Forward sweep from a p x k seed (identity by default). Returns ``(value, tangent)``, tangent of length k."""
    _single_output(program)
    if trace is None:
        trace = evaluate_with_derivatives(program, x, policy, exact=exact, counter=counter)
    conv, zero = _numeric(trace, accumulate)
    if trace.exact:
        conv_seed = to_fraction
    elif conv is Fraction:
        conv_seed = lambda v: v if isinstance(v, Fraction) else Fraction(float(v))
    else:
        conv_seed = float
    tangents = _seed_rows(seed, program.p, conv_seed, zero)
    k = len(tangents[0]) if tangents else 0
    for node, w in zip(program.nodes, trace.derivs):
        if counter is not None:
            counter.charge_times(k * len(node.args))
            counter.charge_plus(k * (len(node.args) - 1))
        ws = [conv(wj) for wj in w]
        first = tangents[node.args[0] - 1]
        acc = [t * ws[0] for t in first]
        for j, wj in zip(node.args[1:], ws[1:]):
            tj = tangents[j - 1]
            for c in range(k):
                acc[c] += tj[c] * wj
        tangents.append(acc)
    return trace.output, _finish(tangents[-1], trace)


def directional_derivatives(
    program: Program,
    x: Sequence,
    directions,
    policy: SelectionPolicy = DEFAULT_POLICY,
    **kwargs,
) -> list:
    """Forward-mode derivatives along the columns of the p x k matrix ``directions``.

    These are selection-based: at a kink they follow the policy's choice,
    which need not equal the one-sided directional derivative there.
    """
    return forprop(program, x, policy, seed=directions, **kwargs)[1]


def kink_margin(program: Program, x: Sequence) -> float:
    """Smallest distance of any nonsmooth node argument to its kink/tie locus (float evaluation)."""
    values = _inputs(program, x, exact=False)
    margin = math.inf
    for node in program.nodes:
        args = [values[j - 1] for j in node.args]
        if node.op is not None:
            margin = min(margin, kink_distance(node.op, args))
            values.append(apply(node.op, args, False))
        else:
            margin = min(margin, kink_margin(node.sub, args))
            values.append(evaluate(node.sub, args)[0])
    return margin
