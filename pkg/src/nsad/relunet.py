"""Linear ReLU networks with skip connections.

A network is ``F(x) = M_L Phi_{L-1}(M_{L-1} ... Phi_1(M_1 x))`` where every
``Phi_i`` acts coordinatewise, as the identity or as ReLU according to a
0/1 mask.  There are no biases.  Weights are exact rationals and all
evaluation here is exact, since the algorithms built on top test
pre-activations for equality with zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .errors import (
    ChoiceOutOfRange,
    DimensionError,
    IndexMismatch,
    MultiOutputError,
    NonTernaryWeightError,
    UnsupportedOpError,
)
from .ops import to_fraction
from .program import Program, ProgramBuilder, flatten

POS, ZERO, NEG = 1, 0, -1


def _matrix(rows) -> tuple:
    out = tuple(tuple(to_fraction(v) for v in r) for r in rows)
    if not out or not out[0]:
        raise DimensionError("empty matrix")
    if any(len(r) != len(out[0]) for r in out):
        raise DimensionError("ragged matrix")
    return out


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    mats: tuple
    masks: tuple

    def __post_init__(self):
        mats = tuple(_matrix(m) for m in self.mats)
        masks = tuple(tuple(bool(b) for b in mk) for mk in self.masks)
        if not mats:
            raise DimensionError("a network needs at least one matrix")
        if len(masks) != len(mats) - 1:
            raise DimensionError(f"{len(mats)} matrices need {len(mats) - 1} masks, got {len(masks)}")
        for i in range(1, len(mats)):
            if len(mats[i][0]) != len(mats[i - 1]):
                raise DimensionError(f"M_{i + 1} has {len(mats[i][0])} columns, M_{i} has {len(mats[i - 1])} rows")
            if len(masks[i - 1]) != len(mats[i - 1]):
                raise DimensionError(f"mask {i} has length {len(masks[i - 1])}, layer width is {len(mats[i - 1])}")
        object.__setattr__(self, "mats", mats)
        object.__setattr__(self, "masks", masks)

    @property
    def L(self) -> int:
        return len(self.mats)

    @property
    def p(self) -> int:
        return len(self.mats[0][0])

    @property
    def q(self) -> int:
        return len(self.mats[-1])

    @property
    def widths(self) -> list:
        """``p_0 = p, p_1, ..., p_{L-1}``."""
        return [self.p] + [len(m) for m in self.mats[:-1]]

    @property
    def size(self) -> int:
        """Free-parameter count: dense entries of every matrix plus one per hidden coordinate."""
        w = self.widths
        hidden = sum(w[i] * w[i - 1] + w[i] for i in range(1, self.L))
        return hidden + self.q * w[-1]

    @property
    def relu_depth(self) -> int:
        return sum(1 for mk in self.masks if any(mk))

    @property
    def ternary(self) -> bool:
        return all(v in (-1, 0, 1) for m in self.mats for r in m for v in r)

    def __eq__(self, other):
        return isinstance(other, ReluNetwork) and self.mats == other.mats and self.masks == other.masks

    def __hash__(self):
        return hash((self.mats, self.masks))

    def __repr__(self):
        return f"ReluNetwork(L={self.L}, widths={self.widths + [self.q]})"


def matvec(m, x) -> list:
    return [sum((a * b for a, b in zip(row, x) if a), Fraction(0)) for row in m]


@dataclass(frozen=True)
class ActivationPattern:
    """Sign class of every pre-activation; ``None`` marks identity coordinates."""

    layers: tuple

    def zeros(self) -> list:
        """(layer, coordinate) of every zero ReLU pre-activation, 1-based layers, in order."""
        return [(i, j) for i, lay in enumerate(self.layers, start=1) for j, s in enumerate(lay) if s == ZERO]


def net_eval(net: ReluNetwork, x: Sequence):
    """Exact forward pass. Returns ``(output vector, ActivationPattern)``."""
    if len(x) != net.p:
        raise DimensionError(f"network takes {net.p} inputs, got {len(x)}")
    h = [to_fraction(v) for v in x]
    layers = []
    for mat, mask in zip(net.mats[:-1], net.masks):
        z = matvec(mat, h)
        signs = []
        for j, relu in enumerate(mask):
            if relu:
                s = (z[j] > 0) - (z[j] < 0)
                signs.append(s)
                if s <= 0:
                    z[j] = Fraction(0)
            else:
                signs.append(None)
        layers.append(tuple(signs))
        h = z
    return matvec(net.mats[-1], h), ActivationPattern(tuple(layers))


def net_value(net: ReluNetwork, x: Sequence) -> Fraction:
    out, _ = net_eval(net, x)
    if len(out) != 1:
        raise MultiOutputError("net_value needs a single-output network")
    return out[0]


Choices = Union[Sequence, Mapping]


def diagonals(net: ReluNetwork, pattern: ActivationPattern, choices: Choices = ()) -> list:
    """Diagonals D_1..D_{L-1} respecting the pattern, zero coordinates filled from ``choices``."""
    zeros = pattern.zeros()
    if isinstance(choices, Mapping):
        extra = set(choices) - set(zeros)
        if extra:
            raise IndexMismatch(f"choices given for {sorted(extra)}, which are not zero activations {zeros}")
        pick = {k: to_fraction(choices.get(k, 0)) for k in zeros}
    else:
        vals = list(choices)
        if vals and len(vals) != len(zeros):
            raise IndexMismatch(f"{len(vals)} choices for {len(zeros)} zero activations")
        pick = {k: to_fraction(vals[n]) if vals else Fraction(0) for n, k in enumerate(zeros)}
    for k, v in pick.items():
        if not 0 <= v <= 1:
            raise ChoiceOutOfRange(f"choice {v} at layer {k[0]} coordinate {k[1]} is outside [0, 1]")
    diags = []
    for i, lay in enumerate(pattern.layers, start=1):
        d = []
        for j, s in enumerate(lay):
            if s is None or s == POS:
                d.append(Fraction(1))
            elif s == NEG:
                d.append(Fraction(0))
            else:
                d.append(pick[(i, j)])
        diags.append(d)
    return diags


def element_from_diagonals(net: ReluNetwork, diags: Sequence) -> list:
    """``M_1^T D_1 ... M_{L-1}^T D_{L-1} M_L^T`` for a single-output network."""
    if net.q != 1:
        raise MultiOutputError("the autodiff element is defined here for single-output networks")
    v = list(net.mats[-1][0])
    for mat, d in zip(reversed(net.mats[:-1]), reversed(diags)):
        v = [a * b for a, b in zip(v, d)]
        cols = len(mat[0])
        w = [Fraction(0)] * cols
        for vr, row in zip(v, mat):
            if vr:
                for c, a in enumerate(row):
                    if a:
                        w[c] += vr * a
        v = w
    return v


def autodiff_element(net: ReluNetwork, x: Sequence, zero_choices: Choices = ()) -> list:
    """One element of the autodiff conservative gradient at ``x``.

    ``zero_choices`` gives ReLU'(0) for each zero pre-activation, either as a
    sequence ordered like :meth:`ActivationPattern.zeros` or as a mapping
    keyed by ``(layer, coordinate)``.  Omitted choices default to 0.
    """
    _, pattern = net_eval(net, x)
    return element_from_diagonals(net, diagonals(net, pattern, zero_choices))


# ---------------------------------------------------------------- conversions

_NET_OPS = ("add", "sub", "relu", "mul-const")


def net_from_program(program: Program) -> ReluNetwork:
    """One layer per operation over a state holding the used inputs and every node value.

    The first matrix reads the p inputs; each later matrix is the identity on
    the state except for the row of the node it computes, and the mask puts a
    ReLU on that row when the op is a ReLU.  A final selector row reads the
    output.  ``mul-const`` becomes a rational weight.
    """
    program = flatten(program)
    if program.q != 1:
        raise MultiOutputError("only single-output programs convert to networks")
    for node in program.nodes:
        if node.op.kind not in _NET_OPS:
            raise UnsupportedOpError(f"{node.op.label()} has no network form (allowed: add, sub, relu, mul-const)")
    p = program.p
    used = sorted({j for node in program.nodes for j in node.args if j <= p})
    slots = used + list(range(p + 1, program.m + 1))
    pos = {slot: k for k, slot in enumerate(slots)}
    s = len(slots)

    def op_row(node, width, column):
        row = [Fraction(0)] * width
        a = node.args
        k = node.op.kind
        if k == "add":
            row[column(a[0])] += 1
            row[column(a[1])] += 1
        elif k == "sub":
            row[column(a[0])] += 1
            row[column(a[1])] -= 1
        elif k == "relu":
            row[column(a[0])] += 1
        else:
            row[column(a[0])] += node.op.const
        return row

    mats, masks = [], []
    for t, node in enumerate(program.nodes):
        here = pos[p + t + 1]
        if t == 0:
            mat = [[Fraction(0)] * p for _ in range(s)]
            for j in used:
                mat[pos[j]][j - 1] = Fraction(1)
            mat[here] = op_row(node, p, lambda j: j - 1)
        else:
            mat = [[Fraction(int(r == c)) for c in range(s)] for r in range(s)]
            mat[here] = op_row(node, s, lambda j: pos[j])
        mats.append(mat)
        masks.append([c == here and node.op.kind == "relu" for c in range(s)])
    sel = [Fraction(0)] * s
    sel[pos[program.m]] = Fraction(1)
    mats.append([sel])
    return ReluNetwork(tuple(mats), tuple(masks))


def program_from_net(net: ReluNetwork, name: Optional[str] = None) -> Program:
    """Naive {+, -, ReLU} program evaluating a network row by row.

    Weights must be integers; a weight w contributes |w| repeated additions
    (or subtractions), so ternary networks map to one op per nonzero entry.
    """
    if any(Fraction(v).denominator != 1 for m in net.mats for row in m for v in row):
        raise NonTernaryWeightError("program_from_net needs integer weights (ternary in the standard construction)")
    if net.q != 1:
        raise MultiOutputError("only single-output networks convert to programs")
    b = ProgramBuilder(net.p)
    state: list = list(b.inputs)  # slot per coordinate, None for an exact zero

    def combine(row, state):
        plus = [s for a, s in zip(row, state) if a > 0 and s is not None for _ in range(int(a))]
        minus = [s for a, s in zip(row, state) if a < 0 and s is not None for _ in range(int(-a))]
        if not plus and not minus:
            return None
        if plus:
            acc = plus[0]
            rest_plus = plus[1:]
        else:
            acc = b.sub(minus[0], minus[0])  # exact zero without leaving {+, -, ReLU}
            rest_plus = []
        for s in rest_plus:
            acc = b.add(acc, s)
        for s in minus:
            acc = b.sub(acc, s)
        return acc

    for mat, mask in zip(net.mats[:-1], net.masks):
        new = []
        for row, relu in zip(mat, mask):
            slot = combine(row, state)
            if relu and slot is not None:
                slot = b.relu(slot)
            new.append(slot)
        state = new
    out = combine(net.mats[-1][0], state)
    if out is None:
        out = b.sub(1, 1)
    elif out != b.last or out <= net.p:
        out = b.sub(b.add(out, out), out)
    return b.build(name=name)
