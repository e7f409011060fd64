"""Nonsmooth automatic differentiation with exact cost accounting.

Programs over a dictionary of elementary ops, their evaluation and
forward/backward propagation of conservative-gradient elements, cost audits
of the overhead ratios, and the ReLU-network algorithms around them
(conversions, singleton decisions for autodiff gradients, 3-SAT gadgets,
and the directional-derivative construction).
"""
from .audit import CostReport, OpCounter, audit, check_bound, closed_form, instrumented_run, op_table
from .engine import (
    Trace,
    backprop,
    directional_derivatives,
    evaluate,
    evaluate_with_derivatives,
    forprop,
    kink_margin,
)
from .enumeration import EnumVerdict, LayeredGraph, brute_force_vertices, build_graph, decide_singleton, split_activations
from .errors import *  # noqa: F401,F403
from .hardness import (
    CnfFormula,
    clarke_singleton_at_zero,
    dpll_sat,
    encode_3sat,
    max_net,
    parse_dimacs,
    sign_vector_search,
    truth_table_sat,
    write_dimacs,
)
from .ops import DEFAULT_POLICY, Op, SelectionPolicy, make_op, register_custom
from .program import Node, Program, ProgramBuilder, build_program, flatten
from .relunet import ActivationPattern, ReluNetwork, autodiff_element, net_eval, net_from_program, program_from_net
from .schemes import CostScheme, cost, parse_scheme, unit_scheme, weighted_scheme

__version__ = "0.1.0"
