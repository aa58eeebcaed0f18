"""Weak solutions of first-order stationary mean-field games on an interval with Dirichlet data."""

from ._core import (
    CouplingSpec,
    DiscreteOperators,
    GridInterval,
    HamiltonianSpec,
    InputError,
    MfgProblem,
    NonconvergenceError,
    build_operators,
    check_D2,
    check_monotonicity,
    cli,
    default_schedule,
    equation_residuals,
    eval_coupling,
    eval_dp_hamiltonian,
    eval_hamiltonian,
    make_problem,
    manufactured_problem,
    sine_manufactured_pair,
    solve,
    solve_lcp,
    validate_assumptions,
)

__all__ = [
    "CouplingSpec",
    "DiscreteOperators",
    "GridInterval",
    "HamiltonianSpec",
    "InputError",
    "MfgProblem",
    "NonconvergenceError",
    "build_operators",
    "check_D2",
    "check_monotonicity",
    "cli",
    "default_schedule",
    "equation_residuals",
    "eval_coupling",
    "eval_dp_hamiltonian",
    "eval_hamiltonian",
    "make_problem",
    "manufactured_problem",
    "sine_manufactured_pair",
    "solve",
    "solve_lcp",
    "validate_assumptions",
]
