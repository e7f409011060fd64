import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from nsad import (
    CostError,
    MultiOutputError,
    ProgramBuilder,
    audit,
    build_program,
    check_bound,
    closed_form,
    instrumented_run,
    make_op,
    op_table,
    unit_scheme,
    weighted_scheme,
)
from nsad.generators import D0, RELU_DICT, random_nested_program, random_point, random_program
from nsad.schemes import parse_scheme

HALF = Fraction(1, 2)


def single(kind, p=1, const=None):
    return build_program([(kind, tuple(range(1, p + 1)), const)], p=p)


def test_single_mul_contribution():
    report = audit(single("mul", 2))
    assert report.omega_b == 5
    assert report.rows[0].omega_b == Fraction(1 + 2 * 2, 1)


def test_single_log_contribution():
    report = audit(single("log"))
    assert report.rows[0].gd == 2
    assert report.omega_b == 4


def test_chain_of_muls_counted():
    b = ProgramBuilder(1)
    last = 1
    for _ in range(100):
        last = b.mul(last, 1)
    prog = b.build()
    report = audit(prog)
    assert report.cost_p == 100
    assert report.cost_backprop == 100 * 1 + 100 * 2 * 2
    assert report.ratio_b == 5
    assert instrumented_run(prog, [1.0001], "backprop") == report.cost_backprop


def test_p1_eval_count(p1):
    assert instrumented_run(p1, [2, 1, 3], "eval") == 2


def test_relu_program_backprop_count():
    b = ProgramBuilder(2)
    b.relu(b.sub(b.relu(1), 2))
    prog = b.build()
    want = sum(Fraction(1) + len(prog.pr(i)) * 2 for i in range(3, prog.m + 1))
    assert instrumented_run(prog, [1.0, -1.0], "backprop") == want == closed_form(prog, "backprop")


def test_forprop_count_with_four_inputs():
    b = ProgramBuilder(4)
    b.relu(b.add(b.mul(1, 2), b.relu(b.sub(3, 4))))
    prog = b.build()
    p = 4
    want = sum(Fraction(1) + p * len(prog.pr(i)) + p * (len(prog.pr(i)) - 1) for i in range(5, prog.m + 1))
    assert instrumented_run(prog, [1.0, 2.0, 3.0, -1.0], "forprop") == want == audit(prog).cost_forprop


def test_multi_output_audit_rejected():
    prog = build_program([("add", (1, 2)), ("mul", (1, 2))], p=2, q=2)
    with pytest.raises(MultiOutputError):
        audit(prog)


def test_zero_cost_op_rejected():
    scheme = unit_scheme().with_prices("relu", 0, 0)
    with pytest.raises(CostError):
        audit(single("relu"), scheme)


def test_report_json_and_table(p1):
    report = audit(p1, parse_scheme("weighted:c_nonlin=2,c_relu=1/2"))
    d = report.to_dict()
    assert d["scheme"] == "weighted:c_nonlin=2,c_relu=1/2"
    assert d["cost_p"] == 2 and d["ratio_b"] == 5
    text = report.table()
    assert "omega_b" in text and "mul" in text


def test_both_omega_forms_when_add_is_cheaper():
    scheme = unit_scheme().with_prices("add", HALF, HALF)
    report = audit(single("mul", 2), scheme)
    # max form: (1 + 2*1*2)/1 ; sum form: (1 + 2*(1/2 + 1))/1
    assert report.omega_b == 5 and report.omega_b_sum == 4
    assert report.ratio_b <= report.omega_b_sum <= report.omega_b


# ---------------------------------------------------------------- tables

def test_table1():
    rows = op_table("unit")
    assert [r.label for r in rows] == ["(+,x)", "(+c,xc)", "log", "exp", "inv", "relu"]
    assert [r.omega for r in rows] == [5, 3, 4, 3, 5, 3]


def test_table2_symbolic_formulas():
    cn, cr = sympy.symbols("c_nonlin c_relu", positive=True)
    rows = {r.label: r for r in op_table("weighted")}
    assert sympy.simplify(rows["log"].omega - (2 * cn + 2) / cn) == 0
    assert sympy.simplify(rows["exp"].omega - (cn + 2) / cn) == 0
    assert sympy.simplify(rows["inv"].omega - (cn + 4) / cn) == 0
    cr0 = sympy.Symbol("c_relu", nonnegative=True)
    assert sympy.simplify(rows["xrelu"].omega - (5 + cr0) / (1 + cr0)) == 0
    assert rows["(+,x)"].omega == 5 and rows["(+c,xc)"].omega == 3


def test_table2_bounds_hold_on_domain():
    for row in op_table("weighted"):
        verdict = check_bound(row, {"c_nonlin": 1, "c_relu": 0})
        assert verdict.holds, (row.label, verdict)


def test_weighted_unit_parameters_recover_table1():
    rows = op_table("weighted", 1, 1)
    assert [r.omega for r in rows[:5]] == [5, 3, 4, 3, 5]


def test_weighted_scheme_matches_table2_entries():
    s = weighted_scheme(3, HALF)
    assert s.g(make_op("log")) == 3 and s.gd(make_op("log")) == 6
    assert s.gd(make_op("inv")) == 5
    assert s.g(make_op("mul-relu")) == Fraction(3, 2)
    report = audit(single("inv"), s)
    assert report.omega_b == Fraction(3 + 2 + 2, 3)


@pytest.mark.parametrize("label", ["abs", "elu", "max-pool-3x3"])
def test_table3_rows_within_bound(label):
    row = {r.label: r for r in op_table("extended")}[label]
    assert check_bound(row, {"c_nonlin": 1, "c_relu": 0, "n": 1}).holds


def test_table3_norm_rows_need_a_positive_comparison_cost():
    rows = {r.label: r for r in op_table("extended")}
    # omega(norm-inf) <= 3 iff c_relu >= 1/(2n); omega(norm1) <= 2 iff c_relu >= 1/n
    for label, bound in (("norm-inf", lambda n: Fraction(1, 2 * n)), ("norm1", lambda n: Fraction(1, n))):
        verdict = check_bound(rows[label], {"c_relu": 0, "n": 1})
        assert not verdict.holds and verdict.counterexample is not None
        for n in (1, 2, 5, 9):
            at = op_table("extended", 1, bound(n), n=n)
            row = {r.label: r for r in at}[label]
            assert row.omega == row.bound
            below = {r.label: r for r in op_table("extended", 1, bound(n) / 2, n=n)}[label]
            assert below.omega > below.bound


def test_table3_max_pool_value():
    row = {r.label: r for r in op_table("extended", 1, 0)}["max-pool-3x3"]
    assert row.omega == sympy.Rational(171, 153)


# ---------------------------------------------------------------- properties

@given(st.integers(0, 100_000), st.integers(5, 200), st.integers(1, 8))
def test_unit_relu_ratio_at_most_five(seed, n, p):
    prog = random_program(random.Random(seed), n, p, RELU_DICT, tame=False)
    report = audit(prog)
    assert report.ratio_b <= 5
    assert report.ratio_b <= report.omega_b
    assert report.ratio_f <= report.omega_f


@given(st.integers(0, 100_000), st.integers(1, 6),
       st.fractions(min_value=1, max_value=20, max_denominator=8),
       st.fractions(min_value=0, max_value=20, max_denominator=8))
def test_ratios_below_omegas_any_scheme(seed, p, cn, cr):
    rng = random.Random(seed)
    prog = random_program(rng, 30, p, RELU_DICT + ("sub",), tame=False)
    for scheme in (weighted_scheme(cn, cr), unit_scheme().with_prices("add", cr + 1, 1)):
        report = audit(prog, scheme)
        assert report.ratio_b <= report.omega_b_sum <= report.omega_b
        assert report.ratio_f <= report.omega_f


@given(st.integers(0, 100_000), st.integers(1, 6))
def test_instrumented_equals_closed_form(seed, p):
    rng = random.Random(seed)
    prog = random_program(rng, rng.randint(3, 40), p, RELU_DICT)
    x = random_point(rng, p)
    for scheme in (unit_scheme(), weighted_scheme(2, Fraction(1, 3))):
        for mode in ("eval", "backprop", "forprop"):
            assert instrumented_run(prog, x, mode, scheme) == closed_form(prog, mode, scheme)


@given(st.integers(0, 100_000))
def test_instrumented_equals_closed_form_nested(seed):
    rng = random.Random(seed)
    prog = random_nested_program(rng, 3, depth=3, n_nodes=5)
    x = random_point(rng, 3, 1.0)
    for mode in ("eval", "backprop", "forprop"):
        assert instrumented_run(prog, x, mode) == closed_form(prog, mode)


@given(st.integers(0, 100_000), st.integers(1, 6))
def test_omega_f_affine_in_p(seed, p):
    rng = random.Random(seed)
    nodes = random_program(rng, 20, p, D0, tame=False).nodes
    wide = build_program(nodes, 2 * p)
    r1, r2 = audit(build_program(nodes, p)), audit(wide)
    # same topology with twice the inputs: the p-dependent part doubles exactly
    for a, b in zip(r1.rows, r2.rows):
        assert b.omega_f - b.omega_f_const == 2 * (a.omega_f - a.omega_f_const)
        assert a.omega_f == a.omega_f_const + p * a.omega_f_slope
