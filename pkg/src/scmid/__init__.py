"""Identifiability of linear structural causal models.

Exact covariance parametrization of mixed graphs, fiber equations, a verified
interval solver, the polynomial-system reduction with its certificate, and
emitters for the quantified real-arithmetic sentences.
"""

from .formulas import (
    QuantifiedSentence,
    emit_feasibility,
    emit_generic_identifiability,
    emit_numeric_identifiability,
    emit_pd_membership,
    parse_smt2,
    to_smt2,
    to_text,
)
from .graph import GraphError, GraphSyntaxError, MixedGraph, parse_graph
from .identify import (
    GenericVerdict,
    Verdict,
    check_edge_generic,
    check_edge_numeric,
    check_feasible,
    check_generic,
    check_numeric,
)
from .matrix import Matrix, cholesky, is_strictly_diagonally_dominant
from .poly import Poly
from .quad import ConstraintSystem, brute_solutions, normalize, plant_solution
from .reduction import compile_system, embed_witness, pull_back, reduce_pipeline, verify_bundle
from .scm import FiberSystem, ParamPoint, fiber_system, phi, recover_omega
from .solver import PolySystem, SolveConfig, SolveReport, solve

__version__ = "0.1.0"
