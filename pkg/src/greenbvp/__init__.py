"""Green's functions of n-th order linear boundary value problems and their parameter dependence."""
from .analysis import (IDENTICALLY_ZERO, EigenvalueScan, StrongSignWitness, SweepReport,
                       find_eigenvalues, strong_sign_witness, sweep, zero_count)
from .green import (GreenFunction, SingularProblemError, SolvabilityCertificate, build_green,
                    build_kernel, check_solvability, eval_green, solve_bvp)
from .linking import (IDENTITIES, ResidualReport, compare_kernels, identity_residual,
                      linking_residual, residual_report)
from .ode import FundamentalSystem, IntegrationError, fundamental_system
from .problem import BvpSpec, SpecError, dirichlet_problem, mixed_problem
from .recurrence import HOperator, RecurrenceHypothesisError, H_residual, build_H

__version__ = "0.1.0"

__all__ = [
    "BvpSpec", "SpecError", "mixed_problem", "dirichlet_problem",
    "FundamentalSystem", "IntegrationError", "fundamental_system",
    "GreenFunction", "SingularProblemError", "SolvabilityCertificate", "build_green", "build_kernel",
    "check_solvability", "eval_green", "solve_bvp",
    "IDENTITIES", "ResidualReport", "compare_kernels", "identity_residual", "linking_residual",
    "residual_report",
    "HOperator", "RecurrenceHypothesisError", "H_residual", "build_H",
    "IDENTICALLY_ZERO", "EigenvalueScan", "StrongSignWitness", "SweepReport", "find_eigenvalues",
    "strong_sign_witness", "sweep", "zero_count",
]
