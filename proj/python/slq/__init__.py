"""Switched stochastic LQ control: Riccati solvers, stability, simulation and turnpike checks."""

from ._core import (
    ARESolution,
    DRESolution,
    NumericalError,
    Problem,
    __version__,
    apply_feedback_shift,
    gain_from_P,
    load_problem,
    moment_spectral_abscissa,
    quadratic_generator,
    riccati_residual,
    run_turnpike,
    sample_chain_path,
    scalar_problem,
    second_moment,
    simulate,
    solve_are,
    solve_dre,
    stage_cost,
    stationary_distribution,
    transition_matrix,
    uniform_grid,
    validate,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
