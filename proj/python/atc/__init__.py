"""Python front end to the atomistic-to-continuum coupling library."""

from ._atc import (
    CSV_HEADER,
    ConfigurationError,
    ConvergenceRecord,
    DomainError,
    IllPosedParameters,
    NonConvergence,
    SolverError,
    UsageError,
    cauchy_born_W,
    cauchy_born_W_d1,
    count_dof,
    exact_solution,
    fit_rate,
    graded_mesh,
    mesh_size,
    optimal_radii,
    phi,
    phi_d1,
    read_csv,
    reference_solution,
    run_single,
    run_sweep,
    site_energy,
    solve,
    write_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
