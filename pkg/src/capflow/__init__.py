"""capflow: finite-difference simulation of cross-border capital diffusion.

Capital on a 1-D strip of economies diffuses in space, is produced
through an S-shaped technology, depreciates, and leaks through (or is
pumped through) the borders according to configurable flux laws.  The
package ships the explicit solver, a lumped-economy analysis layer used
to cross-check it, ten named study scenarios and a CLI (``capflow``).
"""

from .econ import (
    BoundaryFlux,
    ConstantFlux,
    ConstantTech,
    EconParams,
    EquilibriumReport,
    ExponentialTech,
    GaussianProfile,
    LinearTech,
    OdeSolution,
    PiecewiseExponentialProfile,
    PiecewiseLinearProfile,
    ProductionParams,
    ProportionalToLeft,
    ProportionalToLocal,
    UniformProfile,
    ZeroFlux,
    critical_depreciation,
    critical_point,
    eval_flux,
    eval_initial,
    eval_production,
    eval_tech,
    find_equilibria,
    ode_rhs,
    ode_solve_rk4,
)
from .errors import (
    CapflowError,
    ConfigError,
    DivergenceError,
    DomainError,
    NegativityError,
    ParseError,
    StabilityError,
)
from .scenarios import (
    PRESET_DESCRIPTIONS,
    PRESET_IDS,
    ScenarioConfig,
    default_stride,
    load_config,
    preset,
    save_config,
    sweep,
)
from .solver import (
    CFL_LIMIT,
    ConvergenceResult,
    Diagnostics,
    Field,
    Grid1D,
    SnapshotSeries,
    SolverOptions,
    TimeGrid,
    cfl_check,
    ghost_values,
    run,
    self_convergence,
    step,
    total_capital,
)
from .cli import RunManifest, write_csv, write_summary

__version__ = "0.1.0"
