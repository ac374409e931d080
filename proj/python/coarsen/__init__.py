"""Local coarsening transformations of the 2D Helmholtz stencil."""

from ._core import (
    ConfigError,
    NumericalFailure,
    TransformPair,
    build_helmholtz,
    condition_of_y,
    error,
    global_verify,
    gradient,
    initial_guess,
    linearized_minimize,
    local_problem,
    run_experiment,
    spectrum_at,
    steepest_descent,
)

__all__ = [
    "ConfigError",
    "NumericalFailure",
    "TransformPair",
    "build_helmholtz",
    "condition_of_y",
    "error",
    "global_verify",
    "gradient",
    "initial_guess",
    "linearized_minimize",
    "local_problem",
    "run_experiment",
    "spectrum_at",
    "steepest_descent",
]
