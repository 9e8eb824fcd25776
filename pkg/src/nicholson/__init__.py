"""Analysis toolkit for nonautonomous blowfly-type delay equations.

Covers: parsing of coefficient formulas, model loading and validation,
fixed-step integration with dense output, asymptotic statistics and
permanence/attractivity criteria, the auxiliary interval map, periodic
solutions via the period map, and reproduction experiment pipelines.
"""

from .expr import ExprDomainError, ExprSyntaxError, evaluate, parse, to_source
from .model import (HistoryFunction, NicholsonModel, ScalarField,
                    load_model, transform_about_solution, validate_A0)
from .integrate import Trajectory, integrate, rhs
from .criteria import (AsymptoticStats, CriteriaReport, build_report,
                       compute_stats, permanence_bounds,
                       sliding_window_integral, solve_equilibrium)
from .interval_map import MapSpec, from_zeta, global_attractor_sweep, iterate
from .experiments import (ExperimentReport, find_periodic_solution,
                          reproduce_example, verify_attractivity,
                          verify_periodic_attractor, verify_permanence)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticStats", "CriteriaReport", "ExperimentReport",
    "ExprDomainError", "ExprSyntaxError", "HistoryFunction", "MapSpec",
    "NicholsonModel", "ScalarField", "Trajectory", "build_report",
    "compute_stats", "evaluate", "find_periodic_solution", "from_zeta",
    "global_attractor_sweep", "integrate", "iterate", "load_model",
    "parse", "permanence_bounds", "reproduce_example", "rhs",
    "sliding_window_integral", "solve_equilibrium", "to_source",
    "transform_about_solution", "validate_A0", "verify_attractivity",
    "verify_periodic_attractor", "verify_permanence",
]
