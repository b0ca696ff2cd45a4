"""Declarative scenario configuration.

A scenario bundles everything one run needs: economy, grid, time
stepping, initial profile, border flux and solver options.  Ten named
presets (fig1a .. fig5b) reproduce the bundled study setups; arbitrary
scenarios round-trip through a plain ``key = value`` text format with
``#`` comments and dotted keys for nesting.  Serialization is canonical
(fixed key order, 17 significant digits) so identical configs produce
identical bytes.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .econ import (
    BoundaryFlux,
    ConstantFlux,
    ConstantTech,
    EconParams,
    ExponentialTech,
    GaussianProfile,
    InitialProfile,
    LinearTech,
    PiecewiseExponentialProfile,
    PiecewiseLinearProfile,
    ProductionParams,
    ProportionalToLeft,
    ProportionalToLocal,
    UniformProfile,
    ZeroFlux,
)
from .errors import ConfigError, DomainError, ParseError, StabilityError
from .solver import CFL_LIMIT, Grid1D, SolverOptions, TimeGrid, cfl_check


def default_stride(n_steps: int) -> int:
    """Keep roughly one snapshot per percent of the run."""
    return max(1, n_steps // 100)


@dataclass(frozen=True)
class ScenarioConfig:
    """One complete, validated simulation setup."""

    name: str
    econ: EconParams
    grid: Grid1D
    time: TimeGrid
    initial: InitialProfile
    bc: BoundaryFlux = field(default_factory=BoundaryFlux)
    opts: SolverOptions = field(default_factory=SolverOptions)
    snapshot_stride: int | None = None

    def __post_init__(self):
        if self.snapshot_stride is None:
            object.__setattr__(self, "snapshot_stride", default_stride(self.time.n_steps))
        if not (isinstance(self.snapshot_stride, int) and self.snapshot_stride >= 1):
            raise ConfigError("snapshot stride must be a positive integer")
        if not self.name:
            raise ConfigError("scenario needs a name")
        ratio = cfl_check(self.grid, self.time)
        if ratio > CFL_LIMIT:
            raise StabilityError(ratio, CFL_LIMIT * self.grid.dx * self.grid.dx)
        self._check_profile_fits_domain()
        if isinstance(self.initial, UniformProfile) and not self.bc.is_zero():
            raise ConfigError(
                "a uniform initial profile is only consistent with zero border flux"
            )

    def _check_profile_fits_domain(self):
        length = self.grid.length
        ic = self.initial
        if isinstance(ic, (PiecewiseLinearProfile, PiecewiseExponentialProfile)):
            if ic.ramp_right > length:
                raise ConfigError("profile ramps extend beyond the domain")
        if isinstance(ic, PiecewiseLinearProfile):
            tail = ic.plateau - ic.slope * (length - ic.ramp_right)
            if tail < 0:
                raise ConfigError("descending ramp goes negative inside the domain")


# ---------------------------------------------------------------------------
# presets

PRESET_IDS = (
    "fig1a", "fig1b", "fig2a", "fig2b", "fig3a",
    "fig3b", "fig4a", "fig4b", "fig5a", "fig5b",
)

PRESET_DESCRIPTIONS = {
    "fig1a": "uniform start, sealed borders, constant tech, delta=0.05",
    "fig1b": "uniform start, sealed borders, constant tech, delta=0.5 (fast decay)",
    "fig2a": "uniform start, sealed borders, exponential tech, delta=0.05",
    "fig2b": "uniform start, sealed borders, exponential tech, delta=0.5",
    "fig3a": "gaussian start, constant border drain, delta=0.05",
    "fig3b": "gaussian start, constant border drain, delta=0.0005 (growth)",
    "fig4a": "trapezoid start, constant border drain m=100, delta=0.05",
    "fig4b": "trapezoid start, constant border drain m=100, delta=0.005",
    "fig5a": "exponential-plateau start, proportional border drain, delta=0.05",
    "fig5b": "exponential-plateau start, proportional border drain, delta=0.005",
}

# flux intensity used by the gaussian scenarios; kept as the closed form,
# never as a rounded literal
GAUSSIAN_DRAIN = 10.0 * math.exp(-2.5)

_L = 100.0
_CELLS = 100
_DT = 0.4


def _scenario(name, delta, tech, initial, bc, t_end) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        econ=EconParams(delta=delta, s=1.0, production=ProductionParams(), tech=tech),
        grid=Grid1D(_L, _CELLS),
        time=TimeGrid(_DT, t_end),
        initial=initial,
        bc=bc,
    )


def preset(preset_id: str) -> ScenarioConfig:
    """Construct one of the ten bundled scenarios."""
    uniform = UniformProfile(100.0)
    sealed = BoundaryFlux()
    if preset_id == "fig1a":
        return _scenario("fig1a", 0.05, ConstantTech(1.0), uniform, sealed, 500.0)
    if preset_id == "fig1b":
        return _scenario("fig1b", 0.5, ConstantTech(1.0), uniform, sealed, 50.0)
    if preset_id == "fig2a":
        return _scenario("fig2a", 0.05, ExponentialTech(0.01), uniform, sealed, 500.0)
    if preset_id == "fig2b":
        return _scenario("fig2b", 0.5, ExponentialTech(0.01), uniform, sealed, 500.0)

    if preset_id in ("fig3a", "fig3b"):
        ic = GaussianProfile(peak=100.0, center=50.0, spread=1000.0)
        bc = BoundaryFlux(
            left=ConstantFlux(GAUSSIAN_DRAIN), right=ConstantFlux(GAUSSIAN_DRAIN),
            scale_left=-1.0, scale_right=-1.0,
        )
        delta = 0.05 if preset_id == "fig3a" else 0.0005
        return _scenario(preset_id, delta, ConstantTech(1.0), ic, bc, 200.0)

    if preset_id in ("fig4a", "fig4b"):
        ic = PiecewiseLinearProfile(slope=100.0, plateau=1000.0, ramp_left=10.0, ramp_right=90.0)
        bc = BoundaryFlux(
            left=ConstantFlux(100.0), right=ConstantFlux(100.0),
            scale_left=-1.0, scale_right=-1.0,
        )
        delta = 0.05 if preset_id == "fig4a" else 0.005
        return _scenario(preset_id, delta, ConstantTech(1.0), ic, bc, 200.0)

    if preset_id in ("fig5a", "fig5b"):
        ic = PiecewiseExponentialProfile(rate=1.0, ramp_left=10.0, ramp_right=90.0)
        bc = BoundaryFlux(
            left=ProportionalToLocal(1.0), right=ProportionalToLocal(1.0),
            scale_left=-1.0, scale_right=-1.0,
        )
        delta = 0.05 if preset_id == "fig5a" else 0.005
        return _scenario(preset_id, delta, ConstantTech(1.0), ic, bc, 200.0)

    raise ConfigError(f"unknown preset {preset_id!r}; valid ids: {', '.join(PRESET_IDS)}")


# ---------------------------------------------------------------------------
# config text format

def _fmt(v) -> str:
    if isinstance(v, bool):
        raise TypeError("no boolean config values")
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def save_config(config: ScenarioConfig) -> str:
    """Canonical text form: fixed key order, 17 significant digits."""
    lines = [f"name = {config.name}"]
    econ = config.econ
    lines.append(f"econ.s = {_fmt(econ.s)}")
    lines.append(f"econ.delta = {_fmt(econ.delta)}")
    lines.append(f"econ.n = {_fmt(econ.n)}")
    prod = econ.production
    lines.append(f"econ.production.alpha = {_fmt(prod.alpha)}")
    lines.append(f"econ.production.beta = {_fmt(prod.beta)}")
    lines.append(f"econ.production.p = {_fmt(prod.p)}")
    lines.append(f"econ.production.q = {_fmt(prod.q)}")
    tech = econ.tech
    lines.append(f"econ.tech.kind = {tech.kind}")
    if isinstance(tech, ConstantTech):
        lines.append(f"econ.tech.level = {_fmt(tech.level)}")
    elif isinstance(tech, ExponentialTech):
        lines.append(f"econ.tech.rate = {_fmt(tech.rate)}")
    lines.append(f"grid.length = {_fmt(config.grid.length)}")
    lines.append(f"grid.n_cells = {config.grid.n_cells}")
    lines.append(f"time.dt = {_fmt(config.time.dt)}")
    lines.append(f"time.t_end = {_fmt(config.time.t_end)}")
    ic = config.initial
    lines.append(f"ic.kind = {ic.kind}")
    if isinstance(ic, UniformProfile):
        lines.append(f"ic.level = {_fmt(ic.level)}")
    elif isinstance(ic, GaussianProfile):
        lines.append(f"ic.peak = {_fmt(ic.peak)}")
        lines.append(f"ic.center = {_fmt(ic.center)}")
        lines.append(f"ic.spread = {_fmt(ic.spread)}")
    elif isinstance(ic, PiecewiseLinearProfile):
        lines.append(f"ic.slope = {_fmt(ic.slope)}")
        lines.append(f"ic.plateau = {_fmt(ic.plateau)}")
        lines.append(f"ic.ramp_left = {_fmt(ic.ramp_left)}")
        lines.append(f"ic.ramp_right = {_fmt(ic.ramp_right)}")
    else:
        lines.append(f"ic.rate = {_fmt(ic.rate)}")
        lines.append(f"ic.ramp_left = {_fmt(ic.ramp_left)}")
        lines.append(f"ic.ramp_right = {_fmt(ic.ramp_right)}")
    for side, law in (("left", config.bc.left), ("right", config.bc.right)):
        lines.append(f"bc.{side}.kind = {law.kind}")
        if isinstance(law, ConstantFlux):
            lines.append(f"bc.{side}.value = {_fmt(law.value)}")
        elif isinstance(law, (ProportionalToLocal, ProportionalToLeft)):
            lines.append(f"bc.{side}.coeff = {_fmt(law.coeff)}")
    lines.append(f"bc.scale_left = {_fmt(config.bc.scale_left)}")
    lines.append(f"bc.scale_right = {_fmt(config.bc.scale_right)}")
    lines.append(f"opts.source_form = {config.opts.source_form}")
    lines.append(f"opts.right_flux_argument = {config.opts.right_flux_argument}")
    lines.append(f"opts.negativity_policy = {config.opts.negativity_policy}")
    lines.append(f"stride = {config.snapshot_stride}")
    return "\n".join(lines) + "\n"


_TECH_KEYS = {
    "constant": {"econ.tech.level"},
    "linear": set(),
    "exponential": {"econ.tech.rate"},
}
_IC_KEYS = {
    "uniform": {"ic.level"},
    "gaussian": {"ic.peak", "ic.center", "ic.spread"},
    "piecewise-linear": {"ic.slope", "ic.plateau", "ic.ramp_left", "ic.ramp_right"},
    "piecewise-exponential": {"ic.rate", "ic.ramp_left", "ic.ramp_right"},
}
_BC_KEYS = {
    "zero": set(),
    "constant": {"value"},
    "proportional-local": {"coeff"},
    "proportional-left": {"coeff"},
}
_BASE_KEYS = {
    "name", "econ.s", "econ.delta", "econ.n",
    "econ.production.alpha", "econ.production.beta",
    "econ.production.p", "econ.production.q",
    "econ.tech.kind", "grid.length", "grid.n_cells",
    "time.dt", "time.t_end", "ic.kind",
    "bc.left.kind", "bc.right.kind", "bc.scale_left", "bc.scale_right",
    "opts.source_form", "opts.right_flux_argument", "opts.negativity_policy",
    "stride",
}


class _Entries:
    """Parsed key/value pairs with line numbers, consumed as they are read."""

    def __init__(self, pairs: dict[str, tuple[str, int]]):
        self.pairs = pairs

    def take(self, key, default=None, required=False):
        if key in self.pairs:
            value, _ = self.pairs.pop(key)
            return value
        if required:
            raise ParseError(f"missing required key {key!r}")
        return default

    def take_float(self, key, default=None, required=False):
        raw = self.take(key, required=required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ParseError(f"key {key!r} needs a number, got {raw!r}") from None

    def take_int(self, key, default=None, required=False):
        raw = self.take(key, required=required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ParseError(f"key {key!r} needs an integer, got {raw!r}") from None

    def reject_leftovers(self):
        if self.pairs:
            key, (_, line) = min(self.pairs.items(), key=lambda kv: kv[1][1])
            raise ParseError(f"unknown key {key!r}", line=line)


def _parse_pairs(text: str) -> dict[str, tuple[str, int]]:
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if key in pairs:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        pairs[key] = (value, lineno)
    if not pairs:
        raise ParseError("empty config")
    return pairs


def load_config(text: str) -> ScenarioConfig:
    """Parse config text; unknown keys and violated invariants are hard errors."""
    pairs = _parse_pairs(text)

    # reject unknown keys first, with their line numbers
    tech_kind = pairs.get("econ.tech.kind", ("constant",))[0]
    ic_kind = pairs.get("ic.kind", ("",))[0]
    allowed = set(_BASE_KEYS)
    allowed |= _TECH_KEYS.get(tech_kind, set())
    allowed |= _IC_KEYS.get(ic_kind, set())
    for side in ("left", "right"):
        law_kind = pairs.get(f"bc.{side}.kind", ("zero",))[0]
        allowed |= {f"bc.{side}.{sub}" for sub in _BC_KEYS.get(law_kind, set())}
    for key, (_, line) in sorted(pairs.items(), key=lambda kv: kv[1][1]):
        if key not in allowed:
            raise ParseError(f"unknown key {key!r}", line=line)

    entries = _Entries(dict(pairs))
    name = entries.take("name", required=True)

    production = ProductionParams(
        alpha=entries.take_float("econ.production.alpha", 0.0005),
        beta=entries.take_float("econ.production.beta", 0.0005),
        p=entries.take_float("econ.production.p", 4.0),
        q=entries.take_float("econ.production.q", 4.0),
    )
    tech_kind = entries.take("econ.tech.kind", "constant")
    if tech_kind == "constant":
        tech = ConstantTech(entries.take_float("econ.tech.level", 1.0))
    elif tech_kind == "linear":
        tech = LinearTech()
    elif tech_kind == "exponential":
        tech = ExponentialTech(entries.take_float("econ.tech.rate", required=True))
    else:
        raise ParseError(f"unknown technology kind {tech_kind!r}")
    econ = EconParams(
        delta=entries.take_float("econ.delta", required=True),
        s=entries.take_float("econ.s", 1.0),
        n=entries.take_float("econ.n", 0.0),
        production=production,
        tech=tech,
    )

    length = entries.take_float("grid.length", required=True)
    n_cells = entries.take_int("grid.n_cells", required=True)
    grid = Grid1D(length, n_cells)
    time = TimeGrid(
        entries.take_float("time.dt", required=True),
        entries.take_float("time.t_end", required=True),
    )

    ic_kind = entries.take("ic.kind", required=True)
    if ic_kind == "uniform":
        initial = UniformProfile(entries.take_float("ic.level", required=True))
    elif ic_kind == "gaussian":
        initial = GaussianProfile(
            peak=entries.take_float("ic.peak", required=True),
            center=entries.take_float("ic.center", required=True),
            spread=entries.take_float("ic.spread", required=True),
        )
    elif ic_kind == "piecewise-linear":
        initial = PiecewiseLinearProfile(
            slope=entries.take_float("ic.slope", required=True),
            plateau=entries.take_float("ic.plateau", required=True),
            ramp_left=entries.take_float("ic.ramp_left", required=True),
            ramp_right=entries.take_float("ic.ramp_right", required=True),
        )
    elif ic_kind == "piecewise-exponential":
        initial = PiecewiseExponentialProfile(
            rate=entries.take_float("ic.rate", required=True),
            ramp_left=entries.take_float("ic.ramp_left", required=True),
            ramp_right=entries.take_float("ic.ramp_right", required=True),
        )
    else:
        raise ParseError(f"unknown initial profile kind {ic_kind!r}")

    laws = {}
    for side in ("left", "right"):
        law_kind = entries.take(f"bc.{side}.kind", "zero")
        if law_kind == "zero":
            laws[side] = ZeroFlux()
        elif law_kind == "constant":
            laws[side] = ConstantFlux(entries.take_float(f"bc.{side}.value", required=True))
        elif law_kind == "proportional-local":
            laws[side] = ProportionalToLocal(entries.take_float(f"bc.{side}.coeff", required=True))
        elif law_kind == "proportional-left":
            laws[side] = ProportionalToLeft(entries.take_float(f"bc.{side}.coeff", required=True))
        else:
            raise ParseError(f"unknown flux law kind {law_kind!r}")
    bc = BoundaryFlux(
        left=laws["left"], right=laws["right"],
        scale_left=entries.take_float("bc.scale_left", 1.0),
        scale_right=entries.take_float("bc.scale_right", 1.0),
    )

    opts = SolverOptions(
        source_form=entries.take("opts.source_form", "consistent"),
        right_flux_argument=entries.take("opts.right_flux_argument", "local"),
        negativity_policy=entries.take("opts.negativity_policy", "report"),
    )
    stride = entries.take_int("stride", None)
    entries.reject_leftovers()

    return ScenarioConfig(
        name=name, econ=econ, grid=grid, time=time,
        initial=initial, bc=bc, opts=opts, snapshot_stride=stride,
    )


# ---------------------------------------------------------------------------
# parameter sweeps

SWEEPABLE = ("delta", "s", "tech_rate", "flux_magnitude", "d_spread")


def _with_value(base: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    name = f"{base.name}-{parameter}-{value:g}"
    if parameter == "delta":
        econ = dataclasses.replace(base.econ, delta=value)
        return dataclasses.replace(base, name=name, econ=econ)
    if parameter == "s":
        econ = dataclasses.replace(base.econ, s=value)
        return dataclasses.replace(base, name=name, econ=econ)
    if parameter == "tech_rate":
        if not isinstance(base.econ.tech, ExponentialTech):
            raise ConfigError("tech_rate sweep needs exponential technology")
        econ = dataclasses.replace(base.econ, tech=ExponentialTech(value))
        return dataclasses.replace(base, name=name, econ=econ)
    if parameter == "flux_magnitude":
        def remade(law):
            if isinstance(law, ConstantFlux):
                return ConstantFlux(value)
            if isinstance(law, ProportionalToLocal):
                return ProportionalToLocal(value)
            if isinstance(law, ProportionalToLeft):
                return ProportionalToLeft(value)
            raise ConfigError("flux_magnitude sweep needs non-zero flux laws")
        bc = dataclasses.replace(base.bc, left=remade(base.bc.left), right=remade(base.bc.right))
        return dataclasses.replace(base, name=name, bc=bc)
    if parameter == "d_spread":
        if not isinstance(base.initial, GaussianProfile):
            raise ConfigError("d_spread sweep needs a gaussian initial profile")
        ic = dataclasses.replace(base.initial, spread=value)
        return dataclasses.replace(base, name=name, initial=ic)
    raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {SWEEPABLE}")


def sweep(base: ScenarioConfig, parameter: str, values) -> list[ScenarioConfig]:
    """One config per value; never mutates ``base``.

    Any value that breaks a scenario invariant raises a consistency error
    before any config is returned.
    """
    out = []
    for value in values:
        try:
            out.append(_with_value(base, parameter, float(value)))
        except (DomainError, ConfigError) as exc:
            raise ConfigError(f"sweep value {value!r} for {parameter!r}: {exc}") from exc
    return out
