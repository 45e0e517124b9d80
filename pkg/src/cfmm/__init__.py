"""Compressed Cartesian Taylor expansions and synthesized FMM operators."""

from .flops import FlopCounter
from .multiindex import GradedOrdering, count, multi_binomial
from .pde import (PdeOperator, biharmonic_operator, helmholtz_operator,
                  laplace_operator, load_pde, parse_pde)
from .plan import CompressionPlan, build_p_matrix, build_plan, pivot_sets

__version__ = "0.1.0"

__all__ = [
    "FlopCounter",
    "GradedOrdering",
    "count",
    "multi_binomial",
    "PdeOperator",
    "laplace_operator",
    "helmholtz_operator",
    "biharmonic_operator",
    "parse_pde",
    "load_pde",
    "CompressionPlan",
    "build_plan",
    "build_p_matrix",
    "pivot_sets",
    "__version__",
]
