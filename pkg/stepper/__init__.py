from .midpoint import (
    SolverParams,
    StepCallback,
    StepDiagnostics,
    StepFunction,
    effective_tolerance,
    evolve,
    implicit_residual,
    leading_term_map,
    midpoint_step,
    midpoint_step_direct,
    psi_leading_term,
    psi_map,
    solve_fixed_point,
)
from .explicit import nlse_rhs, reference_flow, rk2_explicit_step, rk2_stepper

__all__ = [
    "SolverParams",
    "StepCallback",
    "StepDiagnostics",
    "StepFunction",
    "effective_tolerance",
    "evolve",
    "implicit_residual",
    "leading_term_map",
    "midpoint_step",
    "midpoint_step_direct",
    "nlse_rhs",
    "psi_leading_term",
    "psi_map",
    "reference_flow",
    "rk2_explicit_step",
    "rk2_stepper",
    "solve_fixed_point",
]
