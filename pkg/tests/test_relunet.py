import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nsad import (
    ChoiceOutOfRange,
    DimensionError,
    IndexMismatch,
    NonTernaryWeightError,
    ProgramBuilder,
    ReluNetwork,
    UnsupportedOpError,
    autodiff_element,
    backprop,
    build_program,
    cost,
    evaluate,
    max_net,
    net_eval,
    net_from_program,
    program_from_net,
    unit_scheme,
)
from nsad.generators import random_d0_program, random_net, random_rational_point
from nsad.relunet import ZERO, net_value

F = Fraction


def net(mats, masks):
    return ReluNetwork(tuple(mats), tuple(masks))


RELU = net([[[1]], [[1]]], [[1]])


def test_single_relu():
    assert net_value(RELU, [F(-2)]) == 0
    assert net_value(RELU, [F(3)]) == 3


def test_max_of_two():
    assert net_value(max_net(1), [F(3), F(5)]) == 5
    assert max_net(1).mats == ((( 1, -1), (0, 1), (0, -1)), ((1, 1, -1),))


def test_dimension_checks():
    with pytest.raises(DimensionError):
        net([[[1, 2]], [[1, 1]]], [[1]])
    with pytest.raises(DimensionError):
        net([[[1]], [[1]]], [[1, 0]])
    with pytest.raises(DimensionError):
        net_eval(RELU, [F(1), F(2)])


def test_size_formula():
    n = max_net(2)
    widths = [len(m) for m in n.mats]
    dims = [n.p] + widths
    expected = n.q * dims[-2] + sum(dims[i] * dims[i - 1] + dims[i] for i in range(1, len(dims) - 1))
    assert n.size == expected


def test_pattern_classes():
    out, pattern = net_eval(net([[[1], [-1], [0]], [[1, 1, 1]]], [[1, 1, 1]]), [F(2)])
    assert pattern.layers == ((1, -1, ZERO),)
    assert pattern.zeros() == [(1, 2)]
    assert out == [2]


def test_autodiff_relu_at_zero():
    assert autodiff_element(RELU, [F(0)], [0]) == [0]
    assert autodiff_element(RELU, [F(0)], [1]) == [1]
    assert autodiff_element(RELU, [F(0)], [F(1, 3)]) == [F(1, 3)]
    dead = net([[[1]], [[0]]], [[1]])
    for c in (0, F(1, 2), 1):
        assert autodiff_element(dead, [F(0)], [c]) == [0]


def test_choice_validation():
    with pytest.raises(ChoiceOutOfRange):
        autodiff_element(RELU, [F(0)], [2])
    with pytest.raises(IndexMismatch):
        autodiff_element(RELU, [F(0)], [0, 1])
    with pytest.raises(IndexMismatch):
        autodiff_element(RELU, [F(1)], {(1, 0): 1})
    assert autodiff_element(RELU, [F(0)], {(1, 0): 1}) == [1]


@given(st.integers(0, 10_000), st.fractions(min_value=F(1, 10), max_value=10, max_denominator=12))
def test_positive_homogeneity(seed, lam):
    rng = random.Random(seed)
    n = random_net(rng, 3, [rng.randint(1, 4) for _ in range(rng.randint(0, 3))], weights=(-2, -1, 0, 1, F(1, 2)))
    x = random_rational_point(rng, 3)
    assert net_value(n, [lam * v for v in x]) == lam * net_value(n, x)
    assert net_value(n, [F(7, 3) * v for v in x]) == F(7, 3) * net_value(n, x)


@given(st.integers(0, 10_000))
def test_euler_identity_at_generic_points(seed):
    rng = random.Random(seed)
    n = random_net(rng, 3, [rng.randint(1, 4) for _ in range(rng.randint(0, 3))])
    x = random_rational_point(rng, 3)
    _, pattern = net_eval(n, x)
    if pattern.zeros():
        return
    g = autodiff_element(n, x)
    assert sum(a * b for a, b in zip(g, x)) == net_value(n, x)


@given(st.integers(0, 10_000))
def test_generic_element_is_local_gradient(seed):
    rng = random.Random(seed)
    n = random_net(rng, 2, [3, 3])
    x = random_rational_point(rng, 2)
    _, pattern = net_eval(n, x)
    if pattern.zeros():
        return
    g = autodiff_element(n, x)
    h = 1e-9
    xf = [float(v) for v in x]
    for j in range(2):
        up = list(xf)
        up[j] += h
        fd = (float(net_value(n, up)) - float(net_value(n, xf))) / h
        assert abs(fd - float(g[j])) <= 1e-5 * max(1.0, abs(float(g[j])))


@given(st.integers(0, 10_000))
def test_element_equals_backprop_of_converted_program(seed):
    rng = random.Random(seed)
    n = random_net(rng, 3, [rng.randint(1, 4) for _ in range(rng.randint(1, 3))])
    x = random_rational_point(rng, 3)
    _, pattern = net_eval(n, x)
    if pattern.zeros():
        return
    prog = program_from_net(n)
    value, grad = backprop(prog, x, exact=True)
    assert value == net_value(n, x)
    assert grad == autodiff_element(n, x)


def test_abs_program_conversion(abs_program):
    assert cost(abs_program, unit_scheme()) == 4
    n = net_from_program(abs_program)
    assert n.L - 1 <= 4
    rng = random.Random(3)
    for _ in range(100):
        x = F(rng.randint(-50, 50), rng.randint(1, 9))
        assert net_value(n, [x]) == abs(x)
    # the same function with the negation spelled in {+, -, ReLU}
    b = ProgramBuilder(1)
    b.add(b.relu(1), b.relu(b.sub(b.sub(1, 1), 1)))
    strict = net_from_program(b.build())
    assert strict.L - 1 == 5
    assert net_value(strict, [F(-5, 2)]) == F(5, 2)


def test_single_relu_program():
    prog = build_program([("relu", (1,))], p=1)
    n = net_from_program(prog)
    assert n.relu_depth == 1
    for v in (-3, 0, F(7, 2)):
        assert net_value(n, [F(v)]) == max(F(v), 0)


def test_unsupported_op():
    prog = build_program([("mul", (1, 1))], p=1)
    with pytest.raises(UnsupportedOpError):
        net_from_program(prog)


def test_max_net_to_program():
    prog = program_from_net(max_net(1))
    assert cost(prog, unit_scheme()) <= 9
    grid = [F(k, 3) for k in range(-5, 5)]
    for a in grid:
        for b in grid:
            assert evaluate(prog, [a, b], exact=True) == [max(a, b)]


def test_identity_net_to_program():
    ident = net([[[1]], [[1]]], [[0]])
    prog = program_from_net(ident)
    for v in (F(-2), F(0), F(5, 3)):
        assert evaluate(prog, [v], exact=True) == [v]


def test_fractional_weights_rejected():
    with pytest.raises(NonTernaryWeightError):
        program_from_net(net([[[F(1, 2)]], [[1]]], [[1]]))


def test_integer_weights_by_repeated_addition():
    n = net([[[2, -3]], [[-2]]], [[1]])
    prog = program_from_net(n)
    assert prog.ops() <= {"add", "sub", "relu"}
    for x in ([F(1), F(0)], [F(3), F(1)], [F(-1), F(-2)]):
        assert evaluate(prog, x, exact=True) == [net_value(n, x)]


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_round_trip_net_program_net(seed, p):
    rng = random.Random(seed)
    n = random_net(rng, p, [rng.randint(1, 4) for _ in range(rng.randint(0, 3))])
    prog = program_from_net(n)
    back = net_from_program(prog)
    for _ in range(20):
        x = random_rational_point(rng, p)
        y = net_value(n, x)
        assert evaluate(prog, x, exact=True) == [y]
        assert net_value(back, x) == y


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(1, 30))
def test_program_to_net_size_bound(seed, p, n_nodes):
    rng = random.Random(seed)
    prog = random_d0_program(rng, n_nodes, p)
    n = net_from_program(prog)
    c = cost(prog, unit_scheme())
    assert n.size <= 18 * c ** 3
    assert n.L - 1 == c
    for _ in range(10):
        x = random_rational_point(rng, p)
        assert net_value(n, x) == evaluate(prog, x, exact=True)[0]


def test_unused_inputs_pruned():
    prog = build_program([("relu", (2,))], p=6)
    n = net_from_program(prog)
    assert n.size <= 18
    assert net_value(n, [F(9), F(-1), F(4), F(4), F(4), F(4)]) == 0
