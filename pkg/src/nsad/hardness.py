"""3-SAT gadgets on ReLU networks.

``encode_3sat`` maps a 3-CNF formula to a ternary-weight network F with
F >= 0, F(0) = 0, and F(x) > 0 for some sign vector x exactly when the
formula is satisfiable.  Since F is positively homogeneous and piecewise
linear, its Clarke subdifferential at 0 is {0} iff F vanishes identically,
which for these networks reduces to a sweep over {-1, 1}^p.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .errors import BudgetExceeded, FormatError, WidthError
from .relunet import ReluNetwork

# ---------------------------------------------------------------- formulas


@dataclass(frozen=True)
class CnfFormula:
    """Clauses of (variable, negated) literals over variables 1..p."""

    p: int
    clauses: tuple

    def __post_init__(self):
        clauses = tuple(tuple((int(v), bool(neg)) for v, neg in c) for c in self.clauses)
        for n, c in enumerate(clauses, start=1):
            if len(c) != 3:
                raise WidthError(f"clause {n} has {len(c)} literals; 3-CNF needs exactly 3")
            for v, _ in c:
                if not 1 <= v <= self.p:
                    raise WidthError(f"clause {n} uses variable {v} outside 1..{self.p}")
        object.__setattr__(self, "clauses", clauses)

    @property
    def n(self) -> int:
        return len(self.clauses)

    def satisfied_by(self, bits) -> bool:
        """``bits[v-1]`` is the truth value of variable v."""
        return all(any(bits[v - 1] != neg for v, neg in c) for c in self.clauses)

    @classmethod
    def from_ints(cls, p: int, clauses: Iterable) -> "CnfFormula":
        """DIMACS-style signed integers, e.g. ``[(1, 2, -3)]``."""
        return cls(p, tuple(tuple((abs(l), l < 0) for l in c) for c in clauses))

    def to_ints(self) -> list:
        return [[-v if neg else v for v, neg in c] for c in self.clauses]


def parse_dimacs(text: str) -> CnfFormula:
    p = None
    declared = None
    clauses, current = [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            if line.startswith("%"):
                break
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError(f"bad problem line {line!r}")
            p, declared = int(parts[2]), int(parts[3])
            continue
        if p is None:
            raise FormatError("clause before the 'p cnf' line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise FormatError(f"bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(current)
    if p is None:
        raise FormatError("missing 'p cnf' line")
    if declared is not None and declared != len(clauses):
        raise FormatError(f"header declares {declared} clauses, found {len(clauses)}")
    return CnfFormula.from_ints(p, clauses)


def write_dimacs(cnf: CnfFormula) -> str:
    lines = [f"p cnf {cnf.p} {cnf.n}"]
    lines += [" ".join(str(l) for l in c) + " 0" for c in cnf.to_ints()]
    return "\n".join(lines) + "\n"


def truth_table_sat(cnf: CnfFormula) -> Optional[tuple]:
    """First satisfying assignment in lexicographic order of (b_1..b_p), or None."""
    for bits in itertools.product((False, True), repeat=cnf.p):
        if cnf.satisfied_by(bits):
            return bits
    return None


def dpll_sat(cnf: CnfFormula) -> bool:
    """Plain DPLL with unit propagation, independent of the truth-table sweep."""
    clauses = [frozenset(c) for c in cnf.to_ints()]

    def solve(clauses):
        clauses = list(clauses)
        while True:
            if any(len(c) == 0 for c in clauses):
                return False
            if not clauses:
                return True
            unit = next((c for c in clauses if len(c) == 1), None)
            if unit is None:
                break
            clauses = _assign(clauses, next(iter(unit)))
        lit = next(iter(clauses[0]))
        return solve(_assign(clauses, lit)) or solve(_assign(clauses, -lit))

    return solve(clauses)


def _assign(clauses, lit):
    return [c - {-lit} for c in clauses if lit not in c]


# ---------------------------------------------------------------- networks

_A = ((1, -1), (0, 1), (0, -1))
_B = ((1, 1, -1),)


def _blockdiag(blocks) -> list:
    cols = sum(len(b[0]) for b in blocks)
    out, off = [], 0
    for b in blocks:
        for row in b:
            out.append([0] * off + list(row) + [0] * (cols - off - len(row)))
        off += len(b[0])
    return out


def _matmul(a, b) -> list:
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def max_net_mats(k: int) -> list:
    """Matrices M_1..M_{k+1} of the max-of-2^k network; every hidden coordinate is a ReLU."""
    if k < 1:
        raise ValueError("max_net needs k >= 1")
    mats = [[list(r) for r in _A], [list(r) for r in _B]]
    for _ in range(1, k):
        doubled = [_blockdiag([m, m]) for m in mats]
        mats = doubled[:-1] + [_matmul([list(r) for r in _A], doubled[-1]), [list(r) for r in _B]]
    return mats


def max_net(k: int) -> ReluNetwork:
    """Network with k ReLU layers computing the max of 2^k inputs."""
    mats = max_net_mats(k)
    return ReluNetwork(tuple(mats), tuple([1] * len(m) for m in mats[:-1]))


def _pad(cnf: CnfFormula) -> list:
    n = max(1, cnf.n)
    target = 1 << (n - 1).bit_length()
    clauses = list(cnf.clauses)
    # always-true filler (b1 or not b1 or b1)
    clauses += [((1, False), (1, True), (1, False))] * (target - len(clauses))
    return clauses


def encode_3sat(cnf: CnfFormula) -> ReluNetwork:
    """Network for min_j ReLU(max(literals of clause j)), clauses padded to a power of two.

    Layers: a linear literal layer (four literals per clause, the first one
    repeated), two ReLU layers of max-of-4 blocks, one ReLU layer for the
    outer ReLU of each clause, then the min over clauses as -max(-c).
    """
    if cnf.p < 1:
        raise WidthError("formula needs at least one variable")
    clauses = _pad(cnf)
    n = len(clauses)
    k = n.bit_length() - 1
    lit_rows = []
    for c in clauses:
        for v, neg in c + (c[0],):
            row = [0] * cnf.p
            row[v - 1] = -1 if neg else 1
            lit_rows.append(row)
    m1, m2, m3 = max_net_mats(2)
    mats = [lit_rows, _blockdiag([m1] * n), _blockdiag([m2] * n), _blockdiag([m3] * n)]
    masks = [[0] * len(lit_rows), [1] * (6 * n), [1] * (3 * n), [1] * n]
    if k == 0:
        mats.append([[1]])
    else:
        mins = max_net_mats(k)
        mins[0] = [[-v for v in r] for r in mins[0]]
        mins[-1] = [[-v for v in r] for r in mins[-1]]
        mats += mins
        masks += [[1] * len(m) for m in mins[:-1]]
    return ReluNetwork(tuple(mats), tuple(masks))


# ---------------------------------------------------------------- sign sweeps

def _batch_eval(net: ReluNetwork, X: np.ndarray) -> np.ndarray:
    """Rows of X through a ternary network in int64 (exact for these sizes)."""
    h = X.astype(np.int64)
    for mat, mask in zip(net.mats[:-1], net.masks):
        m = np.array([[int(v) for v in r] for r in mat], dtype=np.int64)
        h = h @ m.T
        relu = np.array(mask, dtype=bool)
        h[:, relu] = np.maximum(h[:, relu], 0)
    m = np.array([[int(v) for v in r] for r in net.mats[-1]], dtype=np.int64)
    return h @ m.T


def _sign_block(p: int, start: int, stop: int) -> np.ndarray:
    ids = np.arange(start, stop, dtype=np.int64)
    bits = (ids[:, None] >> np.arange(p, dtype=np.int64)[None, :]) & 1
    return 2 * bits - 1


def _first_positive(args):
    net, start, stop = args
    X = _sign_block(net.p, start, stop)
    vals = _batch_eval(net, X)[:, 0]
    hits = np.nonzero(vals > 0)[0]
    if len(hits) == 0:
        return None
    return start + int(hits[0])


def sign_vector_search(net: ReluNetwork, budget: int = 20, jobs: int = 1) -> Optional[list]:
    """First x in {-1, 1}^p (bit order, bit j set means x_{j+1} = 1) with F(x) > 0, or None."""
    if not net.ternary:
        raise ValueError("sign sweeps need a ternary network")
    if net.p > budget:
        raise BudgetExceeded(f"p={net.p} exceeds the 2^{budget} sweep budget")
    total = 1 << net.p
    step = 1 << 12
    chunks = [(net, s, min(total, s + step)) for s in range(0, total, step)]
    if jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            found = [r for r in pool.map(_first_positive, chunks) if r is not None]
        hit = min(found) if found else None
    else:
        hit = None
        for c in chunks:
            hit = _first_positive(c)
            if hit is not None:
                break
    if hit is None:
        return None
    return [int(v) for v in _sign_block(net.p, hit, hit + 1)[0]]


def clarke_singleton_at_zero(net: ReluNetwork, budget: int = 20, jobs: int = 1) -> bool:
    """True iff the encoded F vanishes on every sign vector, i.e. F is constant and its Clarke set at 0 is {0}."""
    return sign_vector_search(net, budget, jobs) is None


def assignment_from_signs(x) -> tuple:
    return tuple(v == 1 for v in x)


def net_value_int(net: ReluNetwork, x) -> Fraction:
    return Fraction(int(_batch_eval(net, np.array([list(x)]))[0, 0]))
