"""Deciding whether the autodiff conservative gradient of a ReLU network is a singleton.

At a point x, the set of autodiff elements is the image of the box of
ReLU'(0) choices under the multilinear map

    d -> M_1^T D_1(d) M_2^T ... D_{L-1}(d) M_L^T.

It is a singleton iff the difference with the all-zero choice is the zero
polynomial.  Writing that difference as one product of doubled block
matrices and prepending an all-ones row turns it into a scalar polynomial
whose monomials correspond to source-sink paths of a layered graph; each
monomial's coefficient is the product of the edge weights along its path.
So singleton-ness is graph reachability.

A witness element is read off a shortest path: no proper subset of its
variables spans another path, so setting exactly those variables to 1 leaves
the path's own monomial as the only surviving term.
"""
from __future__ import annotations

import logging
import math
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import BudgetExceeded, MultiOutputError
from .relunet import NEG, POS, ZERO, ReluNetwork, diagonals, element_from_diagonals, net_eval

log = logging.getLogger(__name__)

_INT64_SAFE = 2 ** 62


# ---------------------------------------------------------------- exact integer matrices

def _lcm_scale(rows) -> np.ndarray:
    """Integer matrix proportional (by a positive factor) to ``rows``; zero patterns of products survive."""
    den = 1
    for r in rows:
        for v in r:
            den = den * v.denominator // math.gcd(den, v.denominator)
    return np.array([[int(v * den) for v in r] for r in rows], dtype=object)


def _bound(a: np.ndarray) -> int:
    return int(max((abs(int(v)) for v in a.flat), default=0))


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact integer product; int64 when the result provably fits, Python ints otherwise."""
    if _bound(a) * _bound(b) * max(1, a.shape[1]) < _INT64_SAFE:
        return (a.astype(np.int64) @ b.astype(np.int64)).astype(object)
    return a.dot(b)


# ---------------------------------------------------------------- activations and graph

@dataclass
class Split:
    """Per hidden layer: fixed diagonal (1 or 0) and the coordinates left free."""

    fixed: list
    variables: list

    @property
    def count(self) -> int:
        return sum(len(v) for v in self.variables)


def split_activations(net: ReluNetwork, x) -> Split:
    """Partition every hidden coordinate into fixed-1, fixed-0 and variable (zero pre-activation)."""
    _, pattern = net_eval(net, x)
    fixed, variables = [], []
    for lay in pattern.layers:
        fixed.append([1 if s is None or s == POS else 0 for s in lay])
        variables.append([j for j, s in enumerate(lay) if s == ZERO])
    return Split(fixed, variables)


@dataclass
class LayeredGraph:
    """Nodes are ``(layer, coordinate)``: source ``(-1, 0)``, inputs ``(0, k)``, free ReLUs, sink ``(L, 0)``."""

    L: int
    layers: list
    edges: dict
    products: int

    @property
    def source(self):
        return (-1, 0)

    @property
    def sink(self):
        return (self.L, 0)

    @property
    def node_count(self) -> int:
        return sum(len(v) for v in self.layers)

    @property
    def edge_count(self) -> int:
        return sum(len(v) for v in self.edges.values())

    def shortest_path(self) -> Optional[list]:
        """Breadth-first search from source to sink; the node list, or None if disconnected."""
        prev = {self.source: None}
        queue = deque([self.source])
        while queue:
            u = queue.popleft()
            if u == self.sink:
                path = []
                while u is not None:
                    path.append(u)
                    u = prev[u]
                return path[::-1]
            for v in self.edges.get(u, ()):
                if v not in prev:
                    prev[v] = u
                    queue.append(v)
        return None


def _doubled(net: ReluNetwork, split: Split):
    """Factors T_0..T_L and fixed diagonals Qbar_0..Qbar_{L-1} of the doubled difference product."""
    L = net.L
    mats = [_lcm_scale(m).T for m in net.mats]  # M_i^T, positively rescaled
    ones = np.ones((1, net.p), dtype=object)
    if L == 1:
        return [ones, np.zeros((net.p, 1), dtype=object)], [np.zeros(net.p, dtype=object)]
    t = [ones, np.hstack([mats[0], -mats[0]])]
    for i in range(1, L - 1):
        z = np.zeros_like(mats[i])
        t.append(np.block([[mats[i], z], [z, mats[i]]]))
    t.append(np.vstack([mats[-1], mats[-1]]))
    qbar = [np.zeros(net.p, dtype=object)]
    for f in split.fixed:
        qbar.append(np.array(f + f, dtype=object))
    return t, qbar


def build_graph(net: ReluNetwork, split: Split) -> LayeredGraph:
    """Edges between every pair of layers i < j where the partial product R is nonzero."""
    if net.q != 1:
        raise MultiOutputError("singleton decisions are implemented for single-output networks")
    L = net.L
    t, qbar = _doubled(net, split)
    coords = {-1: [0], 0: list(range(net.p)), L: [0]}
    for i, var in enumerate(split.variables, start=1):
        coords[i] = var
    layers = [[(i, c) for c in coords[i]] for i in range(-1, L + 1)]
    edges: dict = {}
    products = 0
    for i in range(-1, L):
        if not coords[i]:
            continue
        acc = None  # running product prod_{m=i+1}^{j-1} T_m Qbar_m
        for j in range(i + 1, L + 1):
            if acc is None:
                r = t[j]
            else:
                r = _matmul(acc, t[j])
                products += 1
            if coords[j]:
                rows = coords[i]
                for k in rows:
                    for l in coords[j]:
                        if r[k, l] != 0:
                            edges.setdefault((i, k), []).append((j, l))
            if j < L:
                acc = r * qbar[j][np.newaxis, :]
                products += 1
                if not acc.any():
                    break
    return LayeredGraph(L, layers, edges, products)


# ---------------------------------------------------------------- verdicts

@dataclass
class EnumVerdict:
    singleton: bool
    e1: list
    e2: Optional[list] = None
    path: Optional[list] = None
    choices: Optional[dict] = None
    branch: Optional[str] = None
    seed: Optional[int] = None
    graph_nodes: int = 0
    graph_products: int = 0

    def to_dict(self) -> dict:
        from .formats import rat

        out = {"singleton": self.singleton, "e1": [rat(v) for v in self.e1]}
        if not self.singleton:
            out["e2"] = [rat(v) for v in self.e2]
            out["path"] = [list(n) for n in self.path]
            out["branch"] = self.branch
            out["choices"] = [[k[0], k[1], rat(v)] for k, v in sorted(self.choices.items())]
            if self.seed is not None:
                out["seed"] = self.seed
        return out


def _element(net, pattern, choices: dict) -> list:
    return element_from_diagonals(net, diagonals(net, pattern, choices))


def _nonzero_by_subsets(net, pattern, base, e1, variables):
    for size in range(1, len(variables) + 1):
        for subset in combinations(variables, size):
            ch = dict(base)
            ch.update({v: 1 for v in subset})
            e = _element(net, pattern, ch)
            if e != e1:
                return ch, e
    return None


def _nonzero_by_sampling(net, pattern, e1, variables, seed, max_trials=64):
    rng = random.Random(seed)
    scale = 2 ** 16
    for _ in range(max_trials):
        ch = {v: Fraction(rng.randint(0, scale), scale) for v in variables}
        e = _element(net, pattern, ch)
        diff = [a - b for a, b in zip(e, e1)]
        k = next((n for n, d in enumerate(diff) if d != 0), None)
        if k is None:
            continue
        # round every choice to 0 or 1; affine in each variable, so one endpoint keeps coordinate k nonzero
        for v in variables:
            for end in (0, 1):
                trial = dict(ch)
                trial[v] = Fraction(end)
                if _element(net, pattern, trial)[k] != e1[k]:
                    ch = trial
                    break
        return ch, _element(net, pattern, ch)
    return None


def decide_singleton(net: ReluNetwork, x=None, seed: int = 0) -> EnumVerdict:
    """Singleton certificate, or two distinct autodiff elements with the witness path."""
    if x is None:
        x = [0] * net.p
    split = split_activations(net, x)
    _, pattern = net_eval(net, x)
    e1 = _element(net, pattern, {})
    graph = build_graph(net, split)
    path = graph.shortest_path()
    if path is None:
        return EnumVerdict(True, e1, graph_nodes=graph.node_count, graph_products=graph.products)
    path_vars = [n for n in path if 1 <= n[0] <= net.L - 1]
    # (layer, coord) in the graph is (layer, coord) of the pattern
    choices = {v: 1 for v in path_vars}
    e2 = _element(net, pattern, choices)
    branch = "path"
    used_seed = None
    if e2 == e1:
        log.warning("path assignment gave e2 == e1; falling back to subset search")
        found = _nonzero_by_subsets(net, pattern, {}, e1, path_vars)
        branch = "subset"
        if found is None:
            log.warning("subset search exhausted; falling back to random evaluation")
            found = _nonzero_by_sampling(net, pattern, e1, pattern.zeros(), seed)
            branch, used_seed = "random", seed
        if found is None:
            raise AssertionError("reachable sink but no distinct element found")
        choices, e2 = found
    log.debug("decide_singleton: branch=%s path=%s", branch, path)
    return EnumVerdict(
        False, e1, e2, path, {k: v for k, v in choices.items()}, branch, used_seed,
        graph.node_count, graph.products,
    )


# ---------------------------------------------------------------- brute force oracle

def _vertex_chunk(args):
    net, x, start, stop = args
    _, pattern = net_eval(net, x)
    return _vertices_range(net, pattern, start, stop)


def _vertices_range(net: ReluNetwork, pattern, start: int, stop: int) -> set:
    zeros = pattern.zeros()
    r = len(zeros)
    ids = np.arange(start, stop, dtype=np.int64)
    bits = (ids[:, None] >> np.arange(r, dtype=np.int64)[None, :]) & 1
    base = diagonals(net, pattern, {})
    column = {z: n for n, z in enumerate(zeros)}
    integral = all(v.denominator == 1 for m in net.mats for row in m for v in row)
    dtype = np.int64 if integral and _fits_int64(net) else object
    conv = (lambda v: int(v)) if dtype is np.int64 else (lambda v: v)
    v = np.array([[conv(a) for a in net.mats[-1][0]]] * len(ids), dtype=dtype)
    for layer in range(net.L - 1, 0, -1):
        d = np.array([[conv(a) for a in base[layer - 1]]] * len(ids), dtype=dtype)
        for j in range(d.shape[1]):
            n = column.get((layer, j))
            if n is not None:
                d[:, j] = bits[:, n]
        v = v * d
        m = np.array([[conv(a) for a in row] for row in net.mats[layer - 1]], dtype=dtype)
        v = v @ m
    out = set()
    for row in v:
        out.add(tuple(Fraction(int(a)) if dtype is np.int64 else Fraction(a) for a in row))
    return out


def _fits_int64(net: ReluNetwork) -> bool:
    # |entries| of v @ M grow at most by the largest column sum of |M|
    bound = max(1, max(abs(v) for v in net.mats[-1][0]))
    for m in net.mats[:-1]:
        bound *= max(1, max(sum(abs(v) for v in row) for row in zip(*m)))
    return bound < _INT64_SAFE


def brute_force_vertices(net: ReluNetwork, x=None, budget: int = 20, jobs: int = 1) -> set:
    """All autodiff elements at the 0/1 vertices of the choice box, deduplicated exactly."""
    if net.q != 1:
        raise MultiOutputError("brute force is implemented for single-output networks")
    if x is None:
        x = [0] * net.p
    _, pattern = net_eval(net, x)
    r = len(pattern.zeros())
    if r > budget:
        raise BudgetExceeded(f"{r} free activations exceed the 2^{budget} enumeration budget")
    total = 1 << r
    if jobs <= 1 or total < 4096:
        out = set()
        for start in range(0, total, 1 << 14):
            out |= _vertices_range(net, pattern, start, min(total, start + (1 << 14)))
        return out
    step = -(-total // jobs)
    tasks = [(net, list(x), s, min(total, s + step)) for s in range(0, total, step)]
    out = set()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_vertex_chunk, tasks):
            out |= part
    return out
