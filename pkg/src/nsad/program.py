"""Programs as DAGs over a dictionary, with a predecessor relation.

A program has ``p`` inputs occupying slots ``1..p`` and computation nodes in
slots ``p+1..m``; node ``i`` reads the slots listed in ``pr(i)``, all strictly
smaller than ``i``.  The last ``q`` slots are the outputs.  A node holds
either a dictionary :class:`~nsad.ops.Op` or a nested single-output program,
which is how programs of programs are expressed.  Indices are 1-based
throughout, matching the usual statement of the evaluation loop.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .errors import ArityError, CycleError, EmptyPredecessorError, ProgramError
from .ops import Op, make_op


@dataclass(frozen=True)
class Node:
    args: tuple
    op: Optional[Op] = None
    sub: Optional["Program"] = None

    @property
    def arity(self) -> int:
        return self.op.arity if self.op is not None else self.sub.p

    def label(self) -> str:
        if self.op is not None:
            return self.op.label()
        return f"<{self.sub.name or 'program'}>"


@dataclass(frozen=True, eq=False)
class Program:
    """Validated, immutable program. Build with :func:`build_program` or :class:`ProgramBuilder`."""

    p: int
    q: int
    nodes: tuple
    name: Optional[str] = None
    _level: int = field(default=1, repr=False)

    @property
    def m(self) -> int:
        return self.p + len(self.nodes)

    def node(self, i: int) -> Node:
        if not self.p < i <= self.m:
            raise IndexError(f"slot {i} is not a computation node")
        return self.nodes[i - self.p - 1]

    def pr(self, i: int) -> tuple:
        if 1 <= i <= self.p:
            return ()
        return self.node(i).args

    @property
    def outputs(self) -> range:
        return range(self.m - self.q + 1, self.m + 1)

    @property
    def level(self) -> int:
        return self._level

    @property
    def is_flat(self) -> bool:
        return self._level == 1

    def ops(self) -> set:
        """Op kinds used anywhere, nested programs included."""
        kinds = set()
        for n in self.nodes:
            if n.op is not None:
                kinds.add(n.op.kind)
            else:
                kinds |= n.sub.ops()
        return kinds

    @property
    def rational(self) -> bool:
        """True when every op maps rationals to rationals, so exact evaluation is possible."""
        return all(n.op.rational if n.op is not None else n.sub.rational for n in self.nodes)

    def structure(self) -> tuple:
        """Hashable description used for structural equality (nested programs compared recursively)."""
        return (
            self.p,
            self.q,
            tuple((n.args, n.op if n.op is not None else n.sub.structure()) for n in self.nodes),
        )

    def __eq__(self, other):
        return isinstance(other, Program) and self.structure() == other.structure()

    def __hash__(self):
        return hash(self.structure())

    def __repr__(self):
        return f"Program(p={self.p}, q={self.q}, m={self.m}, level={self.level})"


NodeSpec = Union[Node, tuple]


def _as_node(item) -> Node:
    if isinstance(item, Node):
        return item
    if isinstance(item, dict):
        item = (item.get("op") or item["sub"], item["args"], item.get("const"))
    if len(item) == 3:
        head, args, const = item
    else:
        (head, args), const = item, None
    args = tuple(int(a) for a in args)
    if isinstance(head, Program):
        if const is not None:
            raise ProgramError("nested programs take no constant")
        return Node(args, sub=head)
    if isinstance(head, Op):
        return Node(args, op=head)
    if isinstance(head, str):
        arity = len(args) if args else None
        return Node(args, op=make_op(head, arity=arity, const=const))
    raise TypeError(f"cannot build a node from {item!r}")


def build_program(nodes: Iterable[NodeSpec], p: int, q: int = 1, name: Optional[str] = None) -> Program:
    """Validate a node list against the predecessor invariants and return a Program.

    Each entry is a :class:`Node`, a ``(op, args)`` / ``(op, args, const)``
    tuple, or a JSON-style dict; ``op`` may be an :class:`Op`, a kind name or
    a nested :class:`Program`.
    """
    if p < 1:
        raise ProgramError("a program needs at least one input")
    built = []
    level = 1
    for offset, item in enumerate(nodes):
        i = p + offset + 1
        node = _as_node(item)
        if not node.args:
            raise EmptyPredecessorError(f"computation node {i} has an empty predecessor list")
        for j in node.args:
            if j >= i:
                raise CycleError(f"node {i} reads slot {j}; predecessors must precede the node")
            if j < 1:
                raise ProgramError(f"node {i} reads invalid slot {j}")
        if node.op is not None:
            if len(node.args) != node.op.arity:
                raise ArityError(f"node {i}: {node.op.label()} takes {node.op.arity} arguments, got {len(node.args)}")
        else:
            if node.sub.q != 1:
                raise ProgramError(f"node {i}: nested programs must have a single output")
            if len(node.args) != node.sub.p:
                raise ArityError(f"node {i}: nested program takes {node.sub.p} arguments, got {len(node.args)}")
            level = max(level, node.sub.level + 1)
        built.append(node)
    if q < 1 or len(built) < q:
        raise ProgramError(f"memory size m={p + len(built)} is smaller than p + q = {p + q}")
    return Program(p, q, tuple(built), name, level)


class ProgramBuilder:
    """Incremental construction: each call appends a node and returns its slot index."""

    def __init__(self, p: int):
        self.p = p
        self._nodes: list[Node] = []

    @property
    def inputs(self) -> list:
        return list(range(1, self.p + 1))

    @property
    def last(self) -> int:
        return self.p + len(self._nodes)

    def op(self, kind: str, *args: int, const=None, name=None) -> int:
        self._nodes.append(Node(tuple(args), op=make_op(kind, arity=len(args), const=const, name=name)))
        return self.last

    def call(self, program: Program, *args: int) -> int:
        self._nodes.append(Node(tuple(args), sub=program))
        return self.last

    def add(self, a, b):
        return self.op("add", a, b)

    def sub(self, a, b):
        return self.op("sub", a, b)

    def mul(self, a, b):
        return self.op("mul", a, b)

    def relu(self, a):
        return self.op("relu", a)

    def add_const(self, a, c):
        return self.op("add-const", a, const=c)

    def mul_const(self, a, c):
        return self.op("mul-const", a, const=c)

    def neg(self, a):
        return self.op("mul-const", a, const=-1)

    def build(self, q: int = 1, name: Optional[str] = None) -> Program:
        return build_program(self._nodes, self.p, q, name)


def flatten(program: Program) -> Program:
    """Expand every nested program so that only dictionary ops remain.

    The result computes the same function with the same cost under every
    scheme; nodes keep the authored order with each nested block inlined in
    place.  Output nodes are moved to the end when nesting displaced them.
    """
    if program.is_flat:
        return program
    p = program.p
    flat: list[tuple[Op, list[int]]] = []

    def inline(prog: Program, slots: Sequence[int]) -> list[int]:
        idx = list(slots)
        for node in prog.nodes:
            args = [idx[j - 1] for j in node.args]
            if node.op is not None:
                flat.append((node.op, args))
                idx.append(p + len(flat))
            else:
                idx.append(inline(node.sub, args)[-1])
        return idx

    idx = inline(program, range(1, p + 1))
    outs = idx[program.m - program.q:]
    m = p + len(flat)
    if outs != list(range(m - program.q + 1, m + 1)):
        out_set = set(outs)
        for pos, (_, args) in enumerate(flat):
            slot = p + pos + 1
            if slot in out_set:
                continue
            late = [o for o in outs if o < slot and o in args]
            if late:
                raise ProgramError(
                    f"cannot flatten: output slot {late[0]} feeds non-output slot {slot} and cannot be moved last"
                )
        order = [p + k + 1 for k in range(len(flat)) if p + k + 1 not in out_set] + outs
        remap = {old: new for new, old in enumerate(order, start=p + 1)}
        remap.update({j: j for j in range(1, p + 1)})
        flat = [(flat[old - p - 1][0], [remap[a] for a in flat[old - p - 1][1]]) for old in order]
    return build_program([Node(tuple(args), op=op) for op, args in flat], p, program.q, program.name)
