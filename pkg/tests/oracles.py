"""Independent reference computations used by the tests."""
import itertools
from fractions import Fraction

from nsad import evaluate


def central_fd(program, x, h=1e-6):
    """Central finite-difference gradient of a single-output program."""
    grad = []
    for j in range(len(x)):
        up, down = list(x), list(x)
        up[j] += h
        down[j] -= h
        grad.append((evaluate(program, up)[0] - evaluate(program, down)[0]) / (2 * h))
    return grad


def fd_close(g, fd, rel=1e-6):
    """Mixed relative test: max |g - fd| <= rel * max(1, max |g|)."""
    scale = max(1.0, max(abs(v) for v in g))
    return max(abs(a - b) for a, b in zip(g, fd)) <= rel * scale


def path_integral(program, vertices, n_points, grad_fn):
    """Chain-rule sum along a piecewise-linear path, integrand at cell midpoints."""
    segs = len(vertices) - 1
    per = n_points // segs
    total = 0.0
    for a, b in zip(vertices, vertices[1:]):
        step = [(bi - ai) / per for ai, bi in zip(a, b)]
        for i in range(per):
            u = (i + 0.5) / per
            g = grad_fn(program, [ai + (bi - ai) * u for ai, bi in zip(a, b)])
            total += sum(gi * si for gi, si in zip(g, step))
    return total


def dense_matvec(m, x):
    return [sum((Fraction(a) * b for a, b in zip(row, x)), Fraction(0)) for row in m]


def brute_sat(p, int_clauses):
    """Truth-table satisfiability over DIMACS-style clauses."""
    for bits in itertools.product((False, True), repeat=p):
        if all(any((lit > 0) == bits[abs(lit) - 1] for lit in c) for c in int_clauses):
            return True
    return False
