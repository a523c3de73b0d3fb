"""Greedy sensor selection for ridge-regression estimation."""

from .baselines import bdg_select, dg_select, reg_select, somp_select
from .errors import (
    ConfigError,
    FeasibleSetExhausted,
    InfeasibleSubset,
    InvalidMatrix,
    NotPositiveDefinite,
    ParseError,
    SensorSelectionError,
)
from .greg import GregState, greg_diagnostics, greg_init, greg_select, greg_step
from .linalg import ThinSvd, cholesky_solve, qr_column_pivot, thin_svd
from .problem import (
    OracleState,
    SelectionProblem,
    SelectionResult,
    Termination,
    exhaustive_optimum,
    is_feasible,
    naive_greedy,
    objective,
)
from .reduction import (
    ReducedOutput,
    coincidence_certificate,
    reduce_output,
    truncation_bound_check,
)
from .ridge import RidgeEstimator, evaluate, fit, predict

__version__ = "0.1.0"

__all__ = [
    "bdg_select",
    "cholesky_solve",
    "coincidence_certificate",
    "ConfigError",
    "dg_select",
    "evaluate",
    "exhaustive_optimum",
    "FeasibleSetExhausted",
    "fit",
    "greg_diagnostics",
    "greg_init",
    "greg_select",
    "greg_step",
    "GregState",
    "InfeasibleSubset",
    "InvalidMatrix",
    "is_feasible",
    "naive_greedy",
    "NotPositiveDefinite",
    "objective",
    "OracleState",
    "ParseError",
    "predict",
    "qr_column_pivot",
    "reduce_output",
    "ReducedOutput",
    "reg_select",
    "RidgeEstimator",
    "SelectionProblem",
    "SelectionResult",
    "SensorSelectionError",
    "somp_select",
    "Termination",
    "thin_svd",
    "ThinSvd",
    "truncation_bound_check",
]
