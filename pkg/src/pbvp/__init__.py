"""Second-order periodic boundary value problems on [0, 2pi]."""

from .bracket import BracketError, BracketPair, NonlinearPBVP, validate, verify_lower, verify_one_sided_lipschitz, verify_upper
from .compare import (
    ComparisonInstance,
    ComparisonReport,
    check_nonnegative,
    check_nonpositive,
    check_nonpositive_constant,
    check_nonpositive_homogeneous,
)
from .core import TWO_PI, Grid, GridFunction, Tolerance, leq_pointwise, simpson, sup_norm
from .expr import Field, diff, evaluate, parse, to_string
from .linsolve import LinearPBVP, LinearSolution, coefficients, solve, solve_green
from .monotone import AnomalyError, IterationConfig, IterationHistory, NotConvergedError, apply_A, iterate, solve_modified
from .oracle import fd_solve_linear, fd_solve_nonlinear, residual

__version__ = "0.1.0"
