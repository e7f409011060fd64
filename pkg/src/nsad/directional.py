"""Directional derivatives of F(x, B, M) = (1/p) sum_i |[U B^T M x]_i| at x = 0.

With U a +-1 Hadamard matrix (U^T U = p I) and directions a_i such that
sign(U B^T M a_i) = u_i (column i of U), the one-sided derivative of F
at 0 along a_i is b_i^T M a_i.  Summing over i gives G = Tr(M A B^T),
whose gradient in M is B A^T.  This module builds such instances exactly,
builds the straight-line program for F, and checks the three identities.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import sympy

from .engine import directional_derivatives, evaluate
from .errors import ConstraintViolated, SingularityError
from .program import Program, ProgramBuilder


def sylvester(p: int) -> list:
    """Hadamard matrix of order p (a power of two) by the doubling H_2k = [[H, H], [H, -H]]."""
    if p < 1 or p & (p - 1):
        raise ValueError(f"p={p} is not a power of two")
    h = [[1]]
    while len(h) < p:
        h = [r + r for r in h] + [r + [-v for v in r] for r in h]
    return h


def _mat(rows) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) if isinstance(v, Fraction) else v for v in r] for r in rows])


def _frac(m: sympy.Matrix) -> list:
    return [[Fraction(int(v.p), int(v.q)) for v in m.row(i)] for i in range(m.rows)]


def _mv(m, v) -> list:
    return [sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in m]


def _t(m) -> list:
    return [list(c) for c in zip(*m)]


def _sign(t) -> int:
    return (t > 0) - (t < 0)


@dataclass
class DirectionalInstance:
    p: int
    U: list
    B: list
    M: list
    A: list  # columns a_i stored as A[row][i]
    program: Optional[Program] = field(default=None, repr=False)

    def column(self, mat, i) -> list:
        return [row[i] for row in mat]

    def sign_vectors(self, M=None) -> list:
        """sign(U B^T M a_i) for each i, with an optional replacement M."""
        M = self.M if M is None else M
        out = []
        for i in range(self.p):
            y = _mv(self.U, _mv(_t(self.B), _mv(M, self.column(self.A, i))))
            out.append([_sign(v) for v in y])
        return out

    def constraints_hold(self, M=None) -> bool:
        signs = self.sign_vectors(M)
        return all(signs[i] == self.column(self.U, i) for i in range(self.p))

    def inputs(self, x) -> list:
        """Program input vector: x, then B and M row-major."""
        return list(x) + [v for r in self.B for v in r] + [v for r in self.M for v in r]


def f_program(p: int) -> Program:
    """Straight-line program for F over {+, x, relu, +c, xc}; inputs x (p), B (p*p), M (p*p) row-major."""
    U = sylvester(p)
    b = ProgramBuilder(p + 2 * p * p)
    x = list(range(1, p + 1))
    B = [[p + 1 + r * p + c for c in range(p)] for r in range(p)]
    M = [[p + 1 + p * p + r * p + c for c in range(p)] for r in range(p)]

    def dot(row_slots, vec):
        acc = b.mul(row_slots[0], vec[0])
        for s, v in zip(row_slots[1:], vec[1:]):
            acc = b.add(acc, b.mul(s, v))
        return acc

    def signed_dot(signs, vec):
        acc = b.mul_const(vec[0], signs[0])
        for s, v in zip(signs[1:], vec[1:]):
            acc = b.add(acc, b.mul_const(v, s))
        return acc

    y1 = [dot(M[r], x) for r in range(p)]  # M x
    bt = _t(B)
    y2 = [dot(bt[r], y1) for r in range(p)]  # B^T M x
    y3 = [signed_dot(U[r], y2) for r in range(p)]  # U B^T M x
    absval = []
    for v in y3:
        neg = b.neg(v)
        absval.append(b.add(b.relu(v), b.relu(neg)))
    total = absval[0]
    for v in absval[1:]:
        total = b.add(total, v)
    b.mul_const(total, Fraction(1, p))
    return b.build(name=f"F_p{p}")


def build_directional_instance(p: int, seed: int = 0, B=None, M=None, r=None, max_tries: int = 100) -> DirectionalInstance:
    """Random rational B, M with B^T M invertible and directions satisfying the sign constraints.

    a_i = (B^T M)^{-1} U^T (u_i * r_i) / p with r_i > 0, so that U B^T M a_i = u_i * r_i.
    """
    U = sylvester(p)
    rng = random.Random(seed)
    for _ in range(max_tries):
        Bq = [[Fraction(v) for v in row] for row in B] if B is not None else _random_matrix(rng, p)
        Mq = [[Fraction(v) for v in row] for row in M] if M is not None else _random_matrix(rng, p)
        btm = _mat(_t(Bq)) * _mat(Mq)
        if btm.det() != 0:
            break
        if B is not None and M is not None:
            raise SingularityError("B^T M is singular")
    else:
        raise SingularityError(f"no invertible B^T M after {max_tries} draws")
    inv = btm.inv()
    Ut = _mat(_t(U))
    cols = []
    for i in range(p):
        ri = r[i] if r is not None else [Fraction(rng.randint(1, 8), rng.randint(1, 4)) for _ in range(p)]
        target = [Fraction(U[k][i]) * Fraction(ri[k]) for k in range(p)]
        a = inv * Ut * _mat([[v] for v in target]) / p
        cols.append([row[0] for row in _frac(a)])
    A = _t(cols)
    inst = DirectionalInstance(p, U, Bq, Mq, A, f_program(p))
    if not inst.constraints_hold():
        raise ConstraintViolated("constructed directions violate the sign constraints")
    return inst


def _random_matrix(rng: random.Random, p: int) -> list:
    return [[Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(p)] for _ in range(p)]


def f_value(inst: DirectionalInstance, x, M=None, exact=False):
    M = inst.M if M is None else M
    args = list(x) + [v for r in inst.B for v in r] + [v for r in M for v in r]
    if not exact:
        args = [float(v) for v in args]
    return evaluate(inst.program, args, exact=exact)[0]


@dataclass
class DirectionalReport:
    p: int
    cost: Fraction
    expected: list
    fd: list
    fd_error: float
    fd_consistency: float
    trace_sum: Fraction
    trace: Fraction
    grad_error: float
    forward_mode: list
    forward_mode_at_zero: list
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        from .formats import rat

        return {
            "p": self.p,
            "cost": rat(self.cost),
            "expected": [rat(v) for v in self.expected],
            "fd": self.fd,
            "fd_error": self.fd_error,
            "fd_consistency": self.fd_consistency,
            "trace_sum": rat(self.trace_sum),
            "trace": rat(self.trace),
            "grad_error": self.grad_error,
            "forward_mode": self.forward_mode,
            "forward_mode_at_zero": self.forward_mode_at_zero,
            "checks": dict(self.checks),
            "ok": self.ok,
        }


def directional_check(inst: DirectionalInstance, steps=(1e-4, 1e-5, 1e-6), h: float = 1e-6,
                      tol_fd: float = 1e-8, tol_grad: float = 1e-6) -> DirectionalReport:
    """Check (a) one-sided FD = b_i^T M a_i, (b) exact sum = Tr(M A B^T), (c) FD gradient of G in M = B A^T."""
    from .schemes import cost, unit_scheme

    if not inst.constraints_hold():
        raise ConstraintViolated("sign(U B^T M a_i) != u_i for some i")
    p = inst.p
    zero = [0.0] * p
    cols = [inst.column(inst.A, i) for i in range(p)]
    expected = [sum((inst.B[k][i] * _mv(inst.M, cols[i])[k] for k in range(p)), Fraction(0)) for i in range(p)]

    # (a) one-sided finite differences at several steps
    fd, worst, spread = [], 0.0, 0.0
    f0 = f_value(inst, zero)
    for i, a in enumerate(cols):
        quotients = [(f_value(inst, [t * float(v) for v in a]) - f0) / t for t in steps]
        fd.append(quotients[-1])
        worst = max(worst, max(abs(qt - float(expected[i])) for qt in quotients))
        spread = max(spread, max(quotients) - min(quotients))

    # (b) exact one-sided quotients, summed
    t = Fraction(1, 1000)
    exact_sum = sum(
        ((f_value(inst, [t * v for v in a], exact=True) - f_value(inst, [0] * p, exact=True)) / t for a in cols),
        Fraction(0),
    )
    mab = _mat(inst.M) * _mat(inst.A) * _mat(inst.B).T
    trace = Fraction(int(mab.trace().p), int(mab.trace().q))

    # (c) central differences of G in the entries of M
    def G(Mf):
        return sum(f_value(inst, [1e-3 * float(v) for v in a], M=Mf) / 1e-3 for a in cols)

    bat = _mat(inst.B) * _mat(inst.A).T
    grad_err = 0.0
    constraints_ok = True
    Mf = [[float(v) for v in r] for r in inst.M]
    for r in range(p):
        for c in range(p):
            plus = [row[:] for row in Mf]
            minus = [row[:] for row in Mf]
            plus[r][c] += h
            minus[r][c] -= h
            for pert in (plus, minus):
                constraints_ok &= inst.constraints_hold([[Fraction(v) for v in row] for row in pert])
            g = (G(plus) - G(minus)) / (2 * h)
            grad_err = max(grad_err, abs(g - float(bat[r, c])))

    # forward mode of the engine along (a_i, 0, 0): away from 0 it recovers the derivative, at 0 it follows the selection
    n_in = inst.program.p
    fwd, fwd0 = [], []
    for a in cols:
        seed = [[float(v)] for v in a] + [[0.0]] * (n_in - p)
        at = inst.inputs([1e-3 * float(v) for v in a])
        fwd.append(directional_derivatives(inst.program, [float(v) for v in at], seed)[0])
        fwd0.append(directional_derivatives(inst.program, [float(v) for v in inst.inputs(zero)], seed)[0])
    fwd_err = max(abs(v - float(e)) for v, e in zip(fwd, expected))

    c = cost(inst.program, unit_scheme())
    checks = {
        "constraints": True,
        "fd_directional": worst <= tol_fd,
        "trace_exact": exact_sum == trace and sum(expected) == trace,
        "grad_M": grad_err <= tol_grad and constraints_ok,
        "forward_mode_off_zero": fwd_err <= tol_fd,
        "cost": c == 6 * p * p + 2 * p,
    }
    return DirectionalReport(p, c, expected, fd, worst, spread, exact_sum, trace, grad_err, fwd, fwd0, checks)
