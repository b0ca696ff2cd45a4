"""Model ingredients and the spatially-lumped capital analysis.

This module collects everything the solver consumes that is *economics*
rather than numerics: the S-shaped production function, technological
progress laws, initial capital profiles, border flux laws, and the
zero-dimensional tools used to cross-check the solver (a classical RK4
integrator for the lumped capital equation plus a root-scan/bisection
analysis of its equilibria and the critical depreciation threshold).

Everything here is an immutable value type or a pure function, so it is
safe to share and evaluate from any number of threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError, DivergenceError, DomainError

# Beyond this magnitude the lumped integrator declares divergence.
OVERFLOW_GUARD = 1e15


# ---------------------------------------------------------------------------
# production

@dataclass(frozen=True)
class ProductionParams:
    """Coefficients of the S-shaped per-capita production function.

    Output at capital level k is ``alpha * k**p / (1 + beta * k**q)``.
    With p == q the function saturates at alpha/beta; for p, q > 1 it is
    convex near zero, which is what creates the poverty trap.
    """

    alpha: float = 0.0005
    beta: float = 0.0005
    p: float = 4.0
    q: float = 4.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("production scales alpha and beta must be positive")
        if not (self.p >= 1 and self.q >= 1):
            raise DomainError("production exponents p and q must be >= 1")


def _production_raw(params: ProductionParams, k):
    # No domain check: the solver evaluates this on whatever values the
    # field currently holds, including negative ones under a draining
    # border (even exponents keep the expression finite there).
    kp = k ** params.p
    kq = kp if params.p == params.q else k ** params.q
    return params.alpha * kp / (1.0 + params.beta * kq)


def eval_production(params: ProductionParams, k):
    """Output per capita at capital level ``k`` (scalar or array)."""
    arr = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("capital must be finite and nonnegative")
    out = _production_raw(params, arr)
    return float(out) if np.ndim(k) == 0 else out


# ---------------------------------------------------------------------------
# technological progress

@dataclass(frozen=True)
class ConstantTech:
    """Technology held at a fixed level for all places and times."""

    level: float = 1.0
    kind = "constant"

    def __post_init__(self):
        if not (self.level >= 0 and math.isfinite(self.level)):
            raise DomainError("technology level must be finite and nonnegative")


@dataclass(frozen=True)
class LinearTech:
    """Technology growing linearly in time: A(x, t) = t."""

    kind = "linear"


@dataclass(frozen=True)
class ExponentialTech:
    """Technology growing exponentially in time: A(x, t) = exp(rate * t)."""

    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not math.isfinite(self.rate):
            raise DomainError("technology growth rate must be finite")


TechProgress = Union[ConstantTech, LinearTech, ExponentialTech]


def eval_tech(tech: TechProgress, x: float, t: float) -> float:
    """Technology multiplier at position ``x`` and time ``t``.

    All three laws are uniform in space; ``x`` is accepted so callers can
    treat space-dependent variants uniformly later.
    """
    if not (t >= 0 and math.isfinite(t)):
        raise DomainError("time must be finite and nonnegative")
    if isinstance(tech, ConstantTech):
        return tech.level
    if isinstance(tech, LinearTech):
        return t
    if isinstance(tech, ExponentialTech):
        return math.exp(tech.rate * t)
    raise DomainError(f"unknown technology law {tech!r}")


# ---------------------------------------------------------------------------
# initial capital profiles

@dataclass(frozen=True)
class UniformProfile:
    """Spatially constant initial capital."""

    level: float
    kind = "uniform"

    def __post_init__(self):
        if not (self.level >= 0 and math.isfinite(self.level)):
            raise DomainError("uniform level must be finite and nonnegative")


@dataclass(frozen=True)
class GaussianProfile:
    """Bell-shaped start, capital concentrated around ``center``.

    k0(x) = peak * exp(-(x - center)**2 / spread); a larger spread means
    smaller differences between the interior and the border regions.
    """

    peak: float
    center: float
    spread: float
    kind = "gaussian"

    def __post_init__(self):
        if not (self.peak >= 0 and math.isfinite(self.peak)):
            raise DomainError("gaussian peak must be finite and nonnegative")
        if not (self.spread > 0):
            raise DomainError("gaussian spread must be positive")


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Linear ramps up to a flat plateau: slope*x, then plateau, then the
    mirrored descending ramp after ``ramp_right``.

    Continuity forces plateau == slope * ramp_left; constructions that
    break it are rejected rather than silently patched.
    """

    slope: float
    plateau: float
    ramp_left: float
    ramp_right: float
    kind = "piecewise-linear"

    def __post_init__(self):
        if self.slope < 0:
            raise DomainError("ramp slope must be nonnegative")
        if not (0 <= self.ramp_left <= self.ramp_right):
            raise DomainError("need 0 <= ramp_left <= ramp_right")
        if self.plateau != self.slope * self.ramp_left:
            raise DomainError(
                "plateau must equal slope * ramp_left "
                f"({self.plateau!r} != {self.slope * self.ramp_left!r})"
            )


@dataclass(frozen=True)
class PiecewiseExponentialProfile:
    """Exponential ramps around a flat plateau.

    k0 is exp(rate*x) up to ``ramp_left``, the plateau exp(rate*ramp_left)
    in the middle, and exp(rate*(ramp_left - (x - ramp_right))) beyond
    ``ramp_right`` — continuous at both junctions by construction.
    """

    rate: float
    ramp_left: float
    ramp_right: float
    kind = "piecewise-exponential"

    def __post_init__(self):
        if not math.isfinite(self.rate):
            raise DomainError("exponential ramp rate must be finite")
        if not (0 <= self.ramp_left <= self.ramp_right):
            raise DomainError("need 0 <= ramp_left <= ramp_right")


InitialProfile = Union[
    UniformProfile,
    GaussianProfile,
    PiecewiseLinearProfile,
    PiecewiseExponentialProfile,
]


def eval_initial(profile: InitialProfile, x, length: float):
    """Initial capital k0 at position(s) ``x`` on the domain [0, length]."""
    if not (length > 0):
        raise DomainError("domain length must be positive")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr > length):
        raise DomainError(f"position outside [0, {length}]")
    if isinstance(profile, UniformProfile):
        out = np.full_like(arr, profile.level)
    elif isinstance(profile, GaussianProfile):
        out = profile.peak * np.exp(-((arr - profile.center) ** 2) / profile.spread)
    elif isinstance(profile, PiecewiseLinearProfile):
        rl, rr = profile.ramp_left, profile.ramp_right
        out = np.piecewise(
            arr,
            [arr <= rl, (arr > rl) & (arr <= rr)],
            [
                lambda v: profile.slope * v,
                lambda v: np.full_like(v, profile.plateau),
                lambda v: profile.plateau - profile.slope * (v - rr),
            ],
        )
    elif isinstance(profile, PiecewiseExponentialProfile):
        rl, rr = profile.ramp_left, profile.ramp_right
        out = np.piecewise(
            arr,
            [arr <= rl, (arr > rl) & (arr <= rr)],
            [
                lambda v: np.exp(profile.rate * v),
                lambda v: np.full_like(v, math.exp(profile.rate * rl)),
                lambda v: np.exp(profile.rate * (rl - (v - rr))),
            ],
        )
    else:
        raise DomainError(f"unknown initial profile {profile!r}")
    return float(out) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# border flux laws

@dataclass(frozen=True)
class ZeroFlux:
    """Sealed border: no capital crosses."""

    kind = "zero"


@dataclass(frozen=True)
class ConstantFlux:
    """Fixed flux magnitude, independent of the capital at the border."""

    value: float
    kind = "constant"

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError("flux value must be finite")


@dataclass(frozen=True)
class ProportionalToLocal:
    """Flux proportional to the capital at the border it acts on."""

    coeff: float
    kind = "proportional-local"

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise DomainError("flux coefficient must be finite")


@dataclass(frozen=True)
class ProportionalToLeft:
    """Flux proportional to the capital at the *left* border, wherever
    the law is applied (kept for runs that reproduce that convention)."""

    coeff: float
    kind = "proportional-left"

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise DomainError("flux coefficient must be finite")


FluxLaw = Union[ZeroFlux, ConstantFlux, ProportionalToLocal, ProportionalToLeft]


def eval_flux(law: FluxLaw, k_boundary: float) -> float:
    """Flux magnitude h(k) for a border holding capital ``k_boundary``."""
    if not math.isfinite(k_boundary):
        raise DomainError("boundary capital must be finite")
    if isinstance(law, ZeroFlux):
        return 0.0
    if isinstance(law, ConstantFlux):
        return law.value
    if isinstance(law, (ProportionalToLocal, ProportionalToLeft)):
        return law.coeff * k_boundary
    raise DomainError(f"unknown flux law {law!r}")


def _law_is_zero(law: FluxLaw) -> bool:
    if isinstance(law, ZeroFlux):
        return True
    if isinstance(law, ConstantFlux):
        return law.value == 0.0
    return law.coeff == 0.0


@dataclass(frozen=True)
class BoundaryFlux:
    """Flux laws for the two borders plus their scale factors.

    The solver's boundary update adds ``2*dt*scale*dx*h(k)/dx**2`` at each
    border node, so a positive ``scale * h`` pumps capital in and a
    negative one drains it out.  The bundled scenarios drain (smuggling),
    i.e. they carry scale factors of -1 with positive magnitude laws.
    """

    left: FluxLaw = ZeroFlux()
    right: FluxLaw = ZeroFlux()
    scale_left: float = 1.0
    scale_right: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.scale_left) and math.isfinite(self.scale_right)):
            raise DomainError("boundary scale factors must be finite")

    def is_zero(self) -> bool:
        """True when neither border exchanges any capital."""
        left_zero = _law_is_zero(self.left) or self.scale_left == 0.0
        right_zero = _law_is_zero(self.right) or self.scale_right == 0.0
        return left_zero and right_zero


# ---------------------------------------------------------------------------
# lumped economy

@dataclass(frozen=True)
class EconParams:
    """One economy: savings, depreciation, labor growth, production, tech.

    The consumed fraction is implied as 1 - s and never stored.  Labor
    growth ``n`` only enters the lumped capital equation; the spatial
    solver uses depreciation alone.
    """

    delta: float
    s: float = 1.0
    n: float = 0.0
    production: ProductionParams = field(default_factory=ProductionParams)
    tech: TechProgress = field(default_factory=ConstantTech)

    def __post_init__(self):
        if not (0.0 <= self.s <= 1.0):
            raise DomainError(f"savings rate must lie in [0, 1], got {self.s!r}")
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise DomainError("depreciation rate must be finite and nonnegative")
        if not (self.n >= 0 and math.isfinite(self.n)):
            raise DomainError("labor growth rate must be finite and nonnegative")


def ode_rhs(econ: EconParams, k: float, t: float) -> float:
    """Growth rate of lumped capital: s*A(t)*f(k) - (delta + n)*k."""
    if not (k >= 0 and math.isfinite(k)):
        raise DomainError("capital must be finite and nonnegative")
    a = eval_tech(econ.tech, 0.0, t)
    return econ.s * a * float(_production_raw(econ.production, k)) - (econ.delta + econ.n) * k


@dataclass(frozen=True)
class OdeSolution:
    """Trajectory of the lumped capital equation on a fixed step grid."""

    times: np.ndarray
    values: np.ndarray
    first_negative_time: float | None

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


def ode_solve_rk4(econ: EconParams, k0: float, t_end: float, dt: float = 1e-3) -> OdeSolution:
    """Classical 4th-order Runge-Kutta trajectory of the lumped equation.

    Values that turn negative are reported through
    ``first_negative_time``, never clamped.  Magnitudes beyond
    ``OVERFLOW_GUARD`` abort with a divergence error.
    """
    if not (dt > 0):
        raise DomainError("step size must be positive")
    if dt > t_end:
        raise DomainError("step size must not exceed the horizon")
    if not (k0 >= 0 and math.isfinite(k0)):
        raise DomainError("initial capital must be finite and nonnegative")

    n = round(t_end / dt)
    if n < 1:
        raise DomainError("horizon shorter than half a step")

    prod = econ.production
    alpha, beta, p, q = prod.alpha, prod.beta, prod.p, prod.q
    s, decay = econ.s, econ.delta + econ.n
    tech = econ.tech

    def rhs(k, t):
        if isinstance(tech, ConstantTech):
            a = tech.level
        elif isinstance(tech, LinearTech):
            a = t
        else:
            a = math.exp(tech.rate * t)
        kp = k ** p
        kq = kp if p == q else k ** q
        return s * a * (alpha * kp / (1.0 + beta * kq)) - decay * k

    values = np.empty(n + 1)
    values[0] = k0
    k = k0
    first_negative = None
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(1, n + 1):
        t = (i - 1) * dt
        k1 = rhs(k, t)
        k2 = rhs(k + half * k1, t + half)
        k3 = rhs(k + half * k2, t + half)
        k4 = rhs(k + dt * k3, t + dt)
        k = k + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if not math.isfinite(k) or abs(k) > OVERFLOW_GUARD:
            raise DivergenceError(
                f"lumped trajectory diverged at step {i} (t={i * dt:g})", step=i
            )
        if first_negative is None and k < 0:
            first_negative = i * dt
        values[i] = k
    return OdeSolution(np.arange(n + 1) * dt, values, first_negative)


# ---------------------------------------------------------------------------
# equilibria and the poverty trap

@dataclass(frozen=True)
class EquilibriumReport:
    """Stationary capital levels with their stability classification.

    ``roots`` is sorted ascending and always starts at 0.  Stability is
    one of "stable", "unstable" or "degenerate" (the latter for merged or
    tangent roots where no side-sign claim can be made).
    """

    roots: tuple[float, ...]
    stability: tuple[str, ...]
    critical_delta: float | None


_SCAN_INTERVALS = 10_000
_BISECT_TOL = 1e-10
_MERGE_TOL = 1e-6
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _require_constant_tech(econ: EconParams) -> float:
    if not isinstance(econ.tech, ConstantTech):
        raise ConfigError("equilibrium analysis requires constant technology")
    return econ.tech.level


def _bisect(fun, lo, hi, tol=_BISECT_TOL):
    flo = fun(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def find_equilibria(econ: EconParams) -> EquilibriumReport:
    """All nonnegative roots of s*A*f(k) - delta*k with stability tags.

    Uses a sign-change scan over 10^4 intervals followed by bisection to
    absolute tolerance 1e-10.  Roots closer than 1e-6 are merged and
    flagged "degenerate".
    """
    a = _require_constant_tech(econ)
    if not (econ.delta > 0):
        raise ConfigError("equilibrium analysis requires delta > 0")
    prod = econ.production

    def g(k):
        return econ.s * a * float(_production_raw(prod, k)) - econ.delta * k

    scan_max = max(1e3, 10.0 * prod.alpha / (prod.beta * econ.delta))
    xs = np.linspace(0.0, scan_max, _SCAN_INTERVALS + 1)
    gs = econ.s * a * _production_raw(prod, xs) - econ.delta * xs

    roots = [0.0]
    for i in range(1, _SCAN_INTERVALS):
        if gs[i] == 0.0:
            roots.append(float(xs[i]))
        elif gs[i] * gs[i + 1] < 0.0:
            roots.append(_bisect(g, float(xs[i]), float(xs[i + 1])))
    roots.sort()

    # merge near-coincident roots; anything merged loses its stability claim
    merged: list[float] = []
    degenerate: set[int] = set()
    for r in roots:
        if merged and r - merged[-1] < _MERGE_TOL:
            merged[-1] = 0.5 * (merged[-1] + r)
            degenerate.add(len(merged) - 1)
        else:
            merged.append(r)

    # probe the sign of g between consecutive roots and beyond the last
    probes = [0.5 * (merged[i] + merged[i + 1]) for i in range(len(merged) - 1)]
    probes.append(merged[-1] * 1.5 + 1.0)
    signs = [math.copysign(1.0, g(p)) if g(p) != 0.0 else 0.0 for p in probes]

    stability = []
    for i, _ in enumerate(merged):
        if i in degenerate:
            stability.append("degenerate")
        elif i == 0:
            stability.append("stable" if signs[0] < 0 else "unstable" if signs[0] > 0 else "degenerate")
        else:
            left, right = signs[i - 1], signs[i]
            if left > 0 and right < 0:
                stability.append("stable")
            elif left < 0 and right > 0:
                stability.append("unstable")
            else:
                stability.append("degenerate")

    crit = critical_depreciation(econ) if prod.p > 1 else None
    return EquilibriumReport(tuple(merged), tuple(stability), crit)


def critical_point(econ: EconParams) -> tuple[float, float]:
    """Capital level and value maximizing s*A*f(k)/k over k > 0.

    Golden-section search to relative tolerance 1e-8 on a bracket located
    by a coarse geometric scan.  Above the returned value, depreciation
    beats production everywhere and 0 is the only equilibrium.
    """
    a = _require_constant_tech(econ)
    prod = econ.production
    if prod.p <= 1:
        raise ConfigError("critical depreciation needs p > 1 (interior maximum)")
    if econ.s == 0.0:
        return 0.0, 0.0

    def intensity(k):
        return econ.s * a * float(_production_raw(prod, k)) / k

    grid = np.geomspace(1e-6, 1e6, 2001)
    vals = econ.s * a * _production_raw(prod, grid) / grid
    i = int(np.argmax(vals))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])

    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = intensity(c), intensity(d)
    while hi - lo > 1e-8 * max(1.0, abs(hi)):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = intensity(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = intensity(d)
    k_star = 0.5 * (lo + hi)
    return k_star, intensity(k_star)


def critical_depreciation(econ: EconParams) -> float:
    """The depreciation threshold above which only the zero equilibrium exists."""
    if econ.s == 0.0:
        _require_constant_tech(econ)
        return 0.0
    return critical_point(econ)[1]
