"""Explicit finite-difference solver for the capital diffusion equation.

Forward-time, centered-space scheme on a uniform 1-D grid of nodes
x_j = j*dx, j = 0..N.  Interior nodes advance by

    k_j' = (1 - dt*delta) k_j + dt*(k_{j+1} - 2 k_j + k_{j-1})/dx^2 + source_j

and the border nodes fold the flux condition into a doubled one-sided
stencil:

    k_0' = (1 - dt*delta) k_0 + 2 dt (k_1 - k_0 + scale_left*dx*h_left(k_0))/dx^2 + source_0
    k_N' = (1 - dt*delta) k_N + 2 dt (k_{N-1} - k_N + scale_right*dx*h_right(k_N))/dx^2 + source_N

The scheme is stable for dt/dx^2 <= 1/2; runs refuse to start beyond
that bound.  A single run is strictly sequential in time; distinct runs
share nothing and can execute in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .econ import (
    BoundaryFlux,
    ConstantFlux,
    ConstantTech,
    EconParams,
    ExponentialTech,
    LinearTech,
    ProportionalToLeft,
    ProportionalToLocal,
    ZeroFlux,
    eval_flux,
    eval_initial,
)
from .errors import ConfigError, DivergenceError, DomainError, NegativityError, StabilityError

CFL_LIMIT = 0.5

SOURCE_CONSISTENT = "consistent"
SOURCE_PAPER_LITERAL = "paper-literal"
RIGHT_FLUX_LOCAL = "local"
RIGHT_FLUX_LEFT = "left"
NEGATIVITY_REPORT = "report"
NEGATIVITY_ABORT = "abort"


# ---------------------------------------------------------------------------
# grids and fields

@dataclass(frozen=True)
class Grid1D:
    """Uniform node grid on [0, length] with n_cells cells (n_cells+1 nodes)."""

    length: float
    n_cells: int

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise DomainError("grid length must be positive and finite")
        if not (isinstance(self.n_cells, int) and self.n_cells >= 1):
            raise DomainError("cell count must be a positive integer")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.dx


@dataclass(frozen=True)
class TimeGrid:
    """Fixed time step dt up to the horizon t_end (rounded to whole steps)."""

    dt: float
    t_end: float

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError("time step must be positive and finite")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise DomainError("horizon must be positive and finite")
        if round(self.t_end / self.dt) < 1:
            raise DomainError("horizon shorter than half a time step")

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)


@dataclass(frozen=True)
class Field:
    """Capital values on the grid nodes at one time level."""

    values: np.ndarray
    time_label: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class SolverOptions:
    """Switches resolving the scheme's convention choices.

    source_form "consistent" uses dt*s*A*f(k); "paper-literal" instead
    adds dt*s*A + f(k) (the two coincide nowhere, the literal form is kept
    for archaeology).  right_flux_argument picks which border value feeds
    the right flux law: the local node ("local") or the left border
    ("left").  negativity_policy "report" records the first negative
    value and keeps going; "abort" stops the run there.
    """

    source_form: str = SOURCE_CONSISTENT
    right_flux_argument: str = RIGHT_FLUX_LOCAL
    negativity_policy: str = NEGATIVITY_REPORT

    def __post_init__(self):
        if self.source_form not in (SOURCE_CONSISTENT, SOURCE_PAPER_LITERAL):
            raise ConfigError(f"unknown source form {self.source_form!r}")
        if self.right_flux_argument not in (RIGHT_FLUX_LOCAL, RIGHT_FLUX_LEFT):
            raise ConfigError(f"unknown right flux argument {self.right_flux_argument!r}")
        if self.negativity_policy not in (NEGATIVITY_REPORT, NEGATIVITY_ABORT):
            raise ConfigError(f"unknown negativity policy {self.negativity_policy!r}")


@dataclass(frozen=True)
class Diagnostics:
    """Run-level observations: first negativity event and peak magnitude."""

    first_negative_time: Optional[float]
    first_negative_step: Optional[int]
    first_negative_node: Optional[int]
    max_abs_value: float


@dataclass(frozen=True)
class SnapshotSeries:
    """Retained fields of one run plus per-snapshot summary statistics.

    ``stats`` holds one row per snapshot: min, max, spatial mean and
    trapezoidal total capital, in that column order.
    """

    grid: Grid1D
    snapshots: tuple[Field, ...]
    stats: np.ndarray
    diagnostics: Diagnostics

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time_label for f in self.snapshots])

    @property
    def minima(self) -> np.ndarray:
        return self.stats[:, 0]

    @property
    def maxima(self) -> np.ndarray:
        return self.stats[:, 1]

    @property
    def means(self) -> np.ndarray:
        return self.stats[:, 2]

    @property
    def totals(self) -> np.ndarray:
        return self.stats[:, 3]

    @property
    def terminal(self) -> Field:
        return self.snapshots[-1]


# ---------------------------------------------------------------------------
# small diagnostics

def cfl_check(grid: Grid1D, tg: TimeGrid) -> float:
    """The stability ratio dt/dx^2.  Runs refuse to start above 1/2."""
    return tg.dt / (grid.dx * grid.dx)


def enforce_cfl(grid: Grid1D, tg: TimeGrid) -> float:
    ratio = cfl_check(grid, tg)
    if ratio > CFL_LIMIT:
        raise StabilityError(ratio, CFL_LIMIT * grid.dx * grid.dx)
    return ratio


def total_capital(field: Field, grid: Grid1D) -> float:
    """Trapezoidal quadrature of the field over the domain."""
    v = field.values
    if v.shape[0] != grid.n_nodes:
        raise DomainError("field length does not match the grid")
    return grid.dx * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1])


def ghost_values(field: Field, grid: Grid1D, bc: BoundaryFlux) -> tuple[float, float]:
    """Fictitious node values just outside each border.

    left ghost  = k_1     + 2*scale_left *dx*h_left(k_0)
    right ghost = k_{N-1} - 2*scale_right*dx*h_right(k_N)
    """
    v = field.values
    if v.shape[0] != grid.n_nodes:
        raise DomainError("field length does not match the grid")
    if not np.all(np.isfinite(v)):
        raise DomainError("field contains non-finite values")
    dx = grid.dx
    left = v[1] + 2.0 * bc.scale_left * dx * eval_flux(bc.left, float(v[0]))
    right = v[-2] - 2.0 * bc.scale_right * dx * eval_flux(bc.right, float(v[-1]))
    return float(left), float(right)


# ---------------------------------------------------------------------------
# the stepping kernel

_TECH_CONSTANT, _TECH_LINEAR, _TECH_EXPONENTIAL = 0, 1, 2
_LAW_ZERO, _LAW_CONSTANT, _LAW_LOCAL, _LAW_LEFT = 0, 1, 2, 3
_OK, _DIVERGED, _WENT_NEGATIVE = 0, 1, 2


@njit(cache=True)
def _flux_value(code, param, arg):
    if code == _LAW_ZERO:
        return 0.0
    if code == _LAW_CONSTANT:
        return param
    return param * arg  # both proportional laws are linear in their argument


@njit(cache=True)
def _advance(k, n_steps, t0, dx, dt, delta, s,
             tech_code, tech_param,
             alpha, beta, p, q, quartic,
             left_code, left_param, right_code, right_param,
             scale_left, scale_right, right_uses_left,
             paper_literal, abort_on_negative,
             snap_steps, out):
    """March ``k`` forward n_steps, filling ``out`` at the listed steps.

    Additions inside the stencils are ordered so that mirrored nodes round
    identically, keeping symmetric problems symmetric to the last bit.
    Returns (status, fail_step, fail_node, neg_step, neg_node, max_abs).
    """
    nn = k.shape[0]
    new = np.empty(nn)
    r = dt / (dx * dx)
    shrink = 1.0 - dt * delta

    max_abs = 0.0
    for j in range(nn):
        av = abs(k[j])
        if av > max_abs:
            max_abs = av

    si = 0
    if si < snap_steps.shape[0] and snap_steps[si] == 0:
        out[si] = k
        si += 1

    neg_step = -1
    neg_node = -1

    for n in range(n_steps):
        t = t0 + n * dt
        if tech_code == _TECH_CONSTANT:
            a = tech_param
        elif tech_code == _TECH_LINEAR:
            a = t
        else:
            a = math.exp(tech_param * t)
        sa = s * a

        for j in range(nn):
            kj = k[j]
            if quartic:
                k2 = kj * kj
                kp = k2 * k2
                kq = kp
            else:
                kp = kj ** p
                kq = kj ** q
            fk = alpha * kp / (1.0 + beta * kq)
            if paper_literal:
                src = dt * sa + fk
            else:
                src = dt * sa * fk
            if j == 0:
                h = _flux_value(left_code, left_param, kj)
                new[0] = shrink * kj + r * (2.0 * ((k[1] - kj) + scale_left * dx * h)) + src
            elif j == nn - 1:
                if right_code == _LAW_LEFT or right_uses_left:
                    arg = k[0]
                else:
                    arg = kj
                h = _flux_value(right_code, right_param, arg)
                new[j] = shrink * kj + r * (2.0 * ((k[nn - 2] - kj) + scale_right * dx * h)) + src
            else:
                new[j] = shrink * kj + r * ((k[j + 1] + k[j - 1]) - 2.0 * kj) + src

        for j in range(nn):
            v = new[j]
            if not math.isfinite(v):
                return _DIVERGED, n + 1, j, neg_step, neg_node, max_abs
            av = abs(v)
            if av > max_abs:
                max_abs = av
            if v < 0.0 and neg_step < 0:
                neg_step = n + 1
                neg_node = j
                if abort_on_negative:
                    return _WENT_NEGATIVE, n + 1, j, neg_step, neg_node, max_abs

        tmp = k
        k = new
        new = tmp

        if si < snap_steps.shape[0] and snap_steps[si] == n + 1:
            out[si] = k
            si += 1

    return _OK, -1, -1, neg_step, neg_node, max_abs


def _tech_encoding(tech) -> tuple[int, float]:
    if isinstance(tech, ConstantTech):
        return _TECH_CONSTANT, tech.level
    if isinstance(tech, LinearTech):
        return _TECH_LINEAR, 0.0
    if isinstance(tech, ExponentialTech):
        return _TECH_EXPONENTIAL, tech.rate
    raise ConfigError(f"unknown technology law {tech!r}")


def _law_encoding(law) -> tuple[int, float]:
    if isinstance(law, ZeroFlux):
        return _LAW_ZERO, 0.0
    if isinstance(law, ConstantFlux):
        return _LAW_CONSTANT, law.value
    if isinstance(law, ProportionalToLocal):
        return _LAW_LOCAL, law.coeff
    if isinstance(law, ProportionalToLeft):
        return _LAW_LEFT, law.coeff
    raise ConfigError(f"unknown flux law {law!r}")


def _kernel_args(grid: Grid1D, dt: float, econ: EconParams, bc: BoundaryFlux,
                 opts: SolverOptions):
    tech_code, tech_param = _tech_encoding(econ.tech)
    left_code, left_param = _law_encoding(bc.left)
    right_code, right_param = _law_encoding(bc.right)
    prod = econ.production
    return (
        grid.dx, dt, econ.delta, econ.s,
        tech_code, tech_param,
        prod.alpha, prod.beta, prod.p, prod.q,
        prod.p == 4.0 and prod.q == 4.0,
        left_code, left_param, right_code, right_param,
        bc.scale_left, bc.scale_right,
        opts.right_flux_argument == RIGHT_FLUX_LEFT,
        opts.source_form == SOURCE_PAPER_LITERAL,
        opts.negativity_policy == NEGATIVITY_ABORT,
    )


def _raise_for_status(status, fail_step, fail_node, dt):
    if status == _DIVERGED:
        raise DivergenceError(
            f"non-finite value at step {fail_step}, node {fail_node}",
            step=fail_step, node=fail_node,
        )
    if status == _WENT_NEGATIVE:
        raise NegativityError(
            f"capital went negative at step {fail_step}, node {fail_node} "
            f"(t={fail_step * dt:g})",
            step=fail_step, node=fail_node, time=fail_step * dt,
        )


def step(field: Field, grid: Grid1D, tg: TimeGrid, econ: EconParams,
         bc: BoundaryFlux, opts: SolverOptions, t_n: float) -> Field:
    """One explicit update of ``field`` from time t_n to t_n + dt."""
    enforce_cfl(grid, tg)
    v = np.asarray(field.values, dtype=float)
    if v.shape[0] != grid.n_nodes:
        raise DomainError("field length does not match the grid")
    if not np.all(np.isfinite(v)):
        raise DomainError("field contains non-finite values")
    snap_steps = np.array([1], dtype=np.int64)
    out = np.empty((1, grid.n_nodes))
    status, fs, fn, _, _, _ = _advance(
        v.copy(), 1, t_n, *_kernel_args(grid, tg.dt, econ, bc, opts),
        snap_steps, out,
    )
    _raise_for_status(status, fs, fn, tg.dt)
    return Field(out[0].copy(), t_n + tg.dt)


def _retained_steps(n_steps: int, stride: int) -> np.ndarray:
    steps = list(range(0, n_steps + 1, stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return np.asarray(steps, dtype=np.int64)


def run(config) -> SnapshotSeries:
    """Execute one scenario from t=0 to its horizon.

    Deterministic: the same config yields bit-identical snapshots.
    Raises StabilityError before doing any work if dt/dx^2 > 1/2, and
    DivergenceError/NegativityError with the step and node of the first
    failure if the march breaks down.
    """
    grid, tg = config.grid, config.time
    enforce_cfl(grid, tg)
    n_steps = tg.n_steps
    stride = config.snapshot_stride

    k0 = np.asarray(eval_initial(config.initial, grid.nodes(), grid.length), dtype=float)
    if not np.all(np.isfinite(k0)):
        raise ConfigError("initial profile is not finite on this grid")
    snap_steps = _retained_steps(n_steps, stride)
    out = np.empty((snap_steps.shape[0], grid.n_nodes))

    status, fs, fn, neg_step, neg_node, max_abs = _advance(
        k0.copy(), n_steps, 0.0, *_kernel_args(grid, tg.dt, econ=config.econ,
                                               bc=config.bc, opts=config.opts),
        snap_steps, out,
    )
    _raise_for_status(status, fs, fn, tg.dt)

    snapshots = tuple(
        Field(out[i].copy(), float(snap_steps[i] * tg.dt))
        for i in range(snap_steps.shape[0])
    )
    stats = np.empty((len(snapshots), 4))
    for i, f in enumerate(snapshots):
        v = f.values
        stats[i, 0] = v.min()
        stats[i, 1] = v.max()
        stats[i, 2] = v.mean()
        stats[i, 3] = total_capital(f, grid)

    diagnostics = Diagnostics(
        first_negative_time=float(neg_step * tg.dt) if neg_step >= 0 else None,
        first_negative_step=int(neg_step) if neg_step >= 0 else None,
        first_negative_node=int(neg_node) if neg_step >= 0 else None,
        max_abs_value=float(max_abs),
    )
    return SnapshotSeries(grid, snapshots, stats, diagnostics)


# ---------------------------------------------------------------------------
# self-convergence

@dataclass(frozen=True)
class ConvergenceResult:
    """Richardson comparison across nested grids at a common final time.

    ``observed_order`` is log2 of the ratio of successive max-norm
    differences on the shared (coarsest) nodes; ``exact`` flags the
    degenerate case where every difference vanishes identically.
    """

    spacings: tuple[float, ...]
    diff_norms: tuple[float, ...]
    orders: tuple[float, ...]
    exact: bool

    @property
    def observed_order(self) -> Optional[float]:
        return self.orders[-1] if self.orders else None


def self_convergence(config, refinement_levels: int = 3) -> ConvergenceResult:
    """Run the scenario at dx, dx/2, dx/4, ... with dt tied to dx^2.

    The time step scales by exactly 1/4 per level so every level lands on
    the coarse run's final step; fields are compared on the coarse nodes
    in the max norm.
    """
    if refinement_levels < 3:
        raise ConfigError("need at least three refinement levels for an order")
    if refinement_levels > 8:
        raise ConfigError("more than eight refinement levels is not supported")
    grid, tg = config.grid, config.time
    enforce_cfl(grid, tg)
    base_steps = tg.n_steps

    finals = []
    spacings = []
    for lev in range(refinement_levels):
        cells = grid.n_cells * 2 ** lev
        dt = tg.dt / 4 ** lev
        steps = base_steps * 4 ** lev
        lgrid = Grid1D(grid.length, cells)
        ltime = TimeGrid(dt, steps * dt)
        k0 = np.asarray(eval_initial(config.initial, lgrid.nodes(), lgrid.length), dtype=float)
        snap_steps = np.array([steps], dtype=np.int64)
        out = np.empty((1, lgrid.n_nodes))
        status, fs, fn, _, _, _ = _advance(
            k0.copy(), steps, 0.0, *_kernel_args(lgrid, dt, config.econ, config.bc, config.opts),
            snap_steps, out,
        )
        _raise_for_status(status, fs, fn, dt)
        finals.append(out[0])
        spacings.append(lgrid.dx)

    # restrict every field to the level-0 nodes so all norms share one grid
    diffs = []
    for lev in range(refinement_levels - 1):
        a = finals[lev][:: 2 ** lev]
        b = finals[lev + 1][:: 2 ** (lev + 1)]
        diffs.append(float(np.max(np.abs(a - b))))

    if all(d == 0.0 for d in diffs):
        return ConvergenceResult(tuple(spacings), tuple(diffs), (), exact=True)
    orders = []
    for i in range(len(diffs) - 1):
        if diffs[i + 1] == 0.0:
            orders.append(math.inf)
        elif diffs[i] == 0.0:
            orders.append(-math.inf)
        else:
            orders.append(math.log2(diffs[i] / diffs[i + 1]))
    return ConvergenceResult(tuple(spacings), tuple(diffs), tuple(orders), exact=False)
