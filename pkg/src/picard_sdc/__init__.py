"""Picard iteration, spectral deferred correction and their collocation fixed point."""
from .errors import ConfigurationError, SingularityError, SolverDivergence
from .problems import (OdeSystem, get_problem, linear_problem, pendulum_problem,
                       reference_solution, vdp_problem)
from .quadrature import NodeFamily, QuadratureRule, lebesgue_max, make_rule, rule_from_nodes
from .sweeper import (Provisional, SolveOptions, SweepKind, SweepScheme, collocation_solve,
                      integrate, iterate, preset, step)

__all__ = [
    "ConfigurationError", "SingularityError", "SolverDivergence",
    "OdeSystem", "get_problem", "linear_problem", "pendulum_problem", "reference_solution",
    "vdp_problem", "NodeFamily", "QuadratureRule", "lebesgue_max", "make_rule",
    "rule_from_nodes", "Provisional", "SolveOptions", "SweepKind", "SweepScheme",
    "collocation_solve", "integrate", "iterate", "preset", "step",
]
