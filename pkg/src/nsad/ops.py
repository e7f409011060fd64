"""Dictionary operations: arity rules, values and selection derivatives.

Every op is a single-output function of ``arity`` reals, optionally carrying
a rational constant payload (``add-const``, ``mul-const``, ``leaky-relu``,
``elu``).  Values are computed with ordinary Python arithmetic so the same
code serves both the exact (``Fraction``) and floating backends; ops that
leave the rationals are refused in exact mode.

The selection derivative of an op returns one element of a conservative
gradient at the given arguments.  At kinks the element is chosen by a
:class:`SelectionPolicy`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Optional, Sequence

from .errors import ArityError, DomainError, InexactOpError, NoSelectionError

# variadic kinds take k >= 2 arguments
UNARY = ("add-const", "mul-const", "inv", "exp", "log", "relu", "abs", "leaky-relu", "elu")
BINARY = ("add", "sub", "mul", "mul-relu")
VARIADIC = ("max", "min", "median", "norm1", "norm-inf")
WITH_CONST = ("add-const", "mul-const", "leaky-relu", "elu")
TRANSCENDENTAL = ("exp", "log", "elu")
KINDS = UNARY + BINARY + VARIADIC + ("custom",)

# dictionaries used throughout
D_RELU = frozenset({"add", "mul", "add-const", "mul-const", "inv", "exp", "log", "relu"})
D_ZERO = frozenset({"add", "sub", "relu"})


def to_fraction(value) -> Fraction:
    """Parse ints, floats, Fractions and "p/q" strings into an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class SelectionPolicy:
    """Which conservative-gradient element to return at kinks.

    ``relu_at_zero`` is the value of ReLU' at 0 (any value in [0, 1] is a
    valid element), ``abs_at_zero`` the value of |.|' at 0 (in [-1, 1]).
    Ties in max/min/median/norm-inf always go to the lowest index.
    """

    relu_at_zero: Fraction = Fraction(0)
    abs_at_zero: Fraction = Fraction(0)
    tie_rule: str = "lowest-index"

    def __post_init__(self):
        r = to_fraction(self.relu_at_zero)
        a = to_fraction(self.abs_at_zero)
        if not 0 <= r <= 1:
            raise ValueError(f"relu_at_zero={r} outside [0, 1]")
        if not -1 <= a <= 1:
            raise ValueError(f"abs_at_zero={a} outside [-1, 1]")
        if self.tie_rule != "lowest-index":
            raise ValueError(f"unknown tie rule {self.tie_rule!r}")
        object.__setattr__(self, "relu_at_zero", r)
        object.__setattr__(self, "abs_at_zero", a)


DEFAULT_POLICY = SelectionPolicy()


@dataclass(frozen=True)
class CustomOp:
    name: str
    arity: int
    fn: Callable[..., object]
    deriv: Optional[Callable[..., Sequence[object]]] = None
    rational: bool = False


_CUSTOM: dict[str, CustomOp] = {}


def register_custom(name: str, arity: int, fn, deriv=None, rational: bool = False) -> CustomOp:
    """Register a user op. ``fn(*args)`` gives the value, ``deriv(*args)`` a gradient element."""
    if arity < 1:
        raise ArityError("custom ops need arity >= 1")
    op = CustomOp(name, arity, fn, deriv, rational)
    _CUSTOM[name] = op
    return op


def custom_op(name: str) -> CustomOp:
    try:
        return _CUSTOM[name]
    except KeyError:
        raise NoSelectionError(f"custom op {name!r} is not registered") from None


@dataclass(frozen=True)
class Op:
    """A dictionary operation; ``const`` is the exact payload of +c, xc, leaky-relu(a), elu(a)."""

    kind: str
    arity: int
    const: Optional[Fraction] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown op kind {self.kind!r}")
        if self.kind in UNARY and self.arity != 1:
            raise ArityError(f"{self.kind} takes 1 argument, got {self.arity}")
        if self.kind in BINARY and self.arity != 2:
            raise ArityError(f"{self.kind} takes 2 arguments, got {self.arity}")
        if self.kind in VARIADIC and self.arity < 2:
            raise ArityError(f"{self.kind} needs k >= 2 arguments, got {self.arity}")
        if self.kind in WITH_CONST:
            if self.const is None:
                raise ValueError(f"{self.kind} needs a constant payload")
            object.__setattr__(self, "const", to_fraction(self.const))
        elif self.const is not None:
            raise ValueError(f"{self.kind} takes no constant")
        if self.kind == "custom":
            if not self.name:
                raise ValueError("custom op needs a name")
        elif self.name is not None:
            raise ValueError("only custom ops are named")
        if self.kind == "leaky-relu" and not 0 < self.const < 1:
            raise ValueError("leaky-relu slope must lie in (0, 1)")
        if self.kind == "elu" and self.const <= 0:
            raise ValueError("elu scale must be positive")

    @property
    def key(self) -> str:
        """Pricing key used by cost schemes."""
        return f"custom:{self.name}" if self.kind == "custom" else self.kind

    @property
    def rational(self) -> bool:
        """Whether the op maps rationals to rationals (usable in exact mode)."""
        if self.kind == "custom":
            return custom_op(self.name).rational
        return self.kind not in TRANSCENDENTAL

    def label(self) -> str:
        if self.kind == "custom":
            return self.name
        if self.const is not None:
            return f"{self.kind}({self.const})"
        if self.kind in VARIADIC:
            return f"{self.kind}-{self.arity}"
        return self.kind


def make_op(kind: str, arity: Optional[int] = None, const=None, name: Optional[str] = None) -> Op:
    """Build an op, inferring the arity of fixed-arity kinds."""
    if kind.endswith("-k"):
        kind = kind[:-2]
    if arity is None:
        if kind in UNARY:
            arity = 1
        elif kind in BINARY:
            arity = 2
        elif kind == "custom":
            arity = custom_op(name).arity
        else:
            raise ArityError(f"{kind} needs an explicit arity")
    if kind == "custom" and arity != custom_op(name).arity:
        raise ArityError(f"custom op {name} takes {custom_op(name).arity} arguments")
    return Op(kind, arity, None if const is None else to_fraction(const), name)


def _sign(t):
    return (t > 0) - (t < 0)


def _lowest_argmax(vals) -> int:
    best = 0
    for j in range(1, len(vals)):
        if vals[j] > vals[best]:
            best = j
    return best


def _lowest_argmin(vals) -> int:
    best = 0
    for j in range(1, len(vals)):
        if vals[j] < vals[best]:
            best = j
    return best


def median_index(vals) -> int:
    """Index of the value at sorted position k // 2, ties to the lowest index."""
    target = sorted(vals)[len(vals) // 2]
    return next(j for j, v in enumerate(vals) if v == target)


def apply(op: Op, args: Sequence, exact: bool):
    """Value of ``op`` at ``args``. Raises DomainError/InexactOpError."""
    k = op.kind
    if exact and not op.rational:
        raise InexactOpError(f"{op.label()} is not available in exact mode")
    c = op.const if exact or op.const is None else float(op.const)
    if k == "add":
        return args[0] + args[1]
    if k == "sub":
        return args[0] - args[1]
    if k == "mul":
        return args[0] * args[1]
    if k == "add-const":
        return args[0] + c
    if k == "mul-const":
        return args[0] * c
    if k == "relu":
        return args[0] if args[0] > 0 else args[0] - args[0]
    if k == "abs":
        return abs(args[0])
    if k == "inv":
        if args[0] == 0:
            raise DomainError("inverse of zero")
        return 1 / args[0] if not exact else Fraction(1) / args[0]
    if k == "log":
        if args[0] <= 0:
            raise DomainError(f"log of nonpositive value {args[0]}")
        return math.log(args[0])
    if k == "exp":
        try:
            return math.exp(args[0])
        except OverflowError:
            raise DomainError(f"exp overflow at {args[0]}") from None
    if k == "leaky-relu":
        return args[0] if args[0] > 0 else c * args[0]
    if k == "elu":
        return args[0] if args[0] >= 0 else c * (math.exp(args[0]) - 1)
    if k == "mul-relu":
        return args[0] * args[1] if args[1] > 0 else args[1] - args[1]
    if k == "max":
        return args[_lowest_argmax(args)]
    if k == "min":
        return args[_lowest_argmin(args)]
    if k == "median":
        return args[median_index(args)]
    if k == "norm1":
        return sum((abs(a) for a in args[1:]), abs(args[0]))
    if k == "norm-inf":
        return max(abs(a) for a in args)
    if k == "custom":
        return custom_op(op.name).fn(*args)
    raise AssertionError(k)


def derivative(op: Op, args: Sequence, value, policy: SelectionPolicy, exact: bool) -> tuple:
    """One element of the op's conservative gradient at ``args`` (length = arity)."""
    k = op.kind
    one = Fraction(1) if exact else 1.0
    zero = one * 0
    if exact:
        c = op.const
        r0, a0 = policy.relu_at_zero, policy.abs_at_zero
    else:
        c = None if op.const is None else float(op.const)
        r0, a0 = float(policy.relu_at_zero), float(policy.abs_at_zero)

    def relu_prime(t):
        return one if t > 0 else (zero if t < 0 else r0)

    def abs_prime(t):
        return one * _sign(t) if t != 0 else a0

    def unit(j, s=None):
        out = [zero] * op.arity
        out[j] = one if s is None else s
        return tuple(out)

    if k in ("add", "sub"):
        return (one, one if k == "add" else -one)
    if k == "mul":
        return (args[1], args[0])
    if k == "add-const":
        return (one,)
    if k == "mul-const":
        return (c,)
    if k == "relu":
        return (relu_prime(args[0]),)
    if k == "abs":
        return (abs_prime(args[0]),)
    if k == "inv":
        return (-(value * value),)
    if k == "log":
        return (1 / args[0],)
    if k == "exp":
        return (value,)
    if k == "leaky-relu":
        t = args[0]
        return (one if t > 0 else (c if t < 0 else c + r0 * (one - c)),)
    if k == "elu":
        t = args[0]
        return (one if t >= 0 else c * math.exp(t),)
    if k == "mul-relu":
        a, b = args
        return (b if b > 0 else zero, a * relu_prime(b))
    if k == "max":
        return unit(_lowest_argmax(args))
    if k == "min":
        return unit(_lowest_argmin(args))
    if k == "median":
        return unit(median_index(args))
    if k == "norm1":
        return tuple(abs_prime(a) for a in args)
    if k == "norm-inf":
        mags = [abs(a) for a in args]
        j = _lowest_argmax(mags)
        return unit(j, abs_prime(args[j]))
    if k == "custom":
        custom = custom_op(op.name)
        if custom.deriv is None:
            raise NoSelectionError(f"custom op {op.name!r} has no registered selection derivative")
        d = tuple(custom.deriv(*args))
        if len(d) != op.arity:
            raise ArityError(f"derivative of {op.name} has {len(d)} entries, expected {op.arity}")
        return d
    raise AssertionError(k)


def kink_distance(op: Op, args: Sequence) -> float:
    """Distance of ``args`` to the nonsmooth locus of ``op`` (inf for smooth ops)."""
    k = op.kind
    if k in ("relu", "abs", "leaky-relu", "elu"):
        return abs(args[0])
    if k == "mul-relu":
        return abs(args[1])
    if k in ("max", "min", "median"):
        if k == "max":
            j = _lowest_argmax(args)
        elif k == "min":
            j = _lowest_argmin(args)
        else:
            j = median_index(args)
        return min(abs(args[j] - a) for i, a in enumerate(args) if i != j)
    if k == "norm1":
        return min(abs(a) for a in args)
    if k == "norm-inf":
        mags = [abs(a) for a in args]
        j = _lowest_argmax(mags)
        gap = min(mags[j] - m for i, m in enumerate(mags) if i != j)
        return min(gap, mags[j])
    return math.inf
