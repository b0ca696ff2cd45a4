"""Command-line entry point, CSV emission and run manifests.

Exit codes: 0 success, 1 usage error, 2 config/consistency error,
3 numerical error (stability refusal or divergence).  Every error path
prints exactly one machine-parseable reason line on stderr; the stdout
of ``run`` carries nothing but a final one-line status so it composes in
shell pipelines.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
import time as _time
from dataclasses import dataclass
from pathlib import Path

from .econ import find_equilibria, EconParams, ConstantTech, ProductionParams
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
    load_config,
    preset,
    save_config,
)
from .solver import (
    Grid1D,
    SnapshotSeries,
    TimeGrid,
    cfl_check,
    run,
    self_convergence,
)

USAGE_ERROR, CONFIG_ERROR, NUMERICAL_ERROR = 1, 2, 3


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# CSV emission

def write_csv(series: SnapshotSeries, destination) -> Path:
    """Long-format data file: header ``t,x,k``, rows ordered by (t, x).

    Reals carry 17 significant digits and lines end in LF, so the bytes
    are identical across repeated runs of the same scenario.
    """
    if not series.snapshots:
        raise ConfigError("refusing to write an empty snapshot series")
    path = Path(destination)
    xs = [_fmt(x) for x in series.grid.nodes()]
    lines = ["t,x,k"]
    for snap in series.snapshots:
        t = _fmt(snap.time_label)
        for x, k in zip(xs, snap.values):
            lines.append(f"{t},{x},{_fmt(k)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_summary(series: SnapshotSeries, destination) -> Path:
    """Per-snapshot spatial min/max/mean and trapezoidal total capital."""
    if not series.snapshots:
        raise ConfigError("refusing to write an empty snapshot series")
    path = Path(destination)
    lines = ["t,min,max,mean,total"]
    for snap, row in zip(series.snapshots, series.stats):
        cells = ",".join(_fmt(v) for v in row)
        lines.append(f"{_fmt(snap.time_label)},{cells}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


# ---------------------------------------------------------------------------
# run manifests

@dataclass(frozen=True)
class RunManifest:
    """Everything needed to audit or replay one run.

    The text form embeds the canonical config verbatim and appends the
    diagnostics as comment lines, so a manifest file is itself loadable
    as a config: replaying it reproduces the recorded digests.
    """

    config_text: str
    cfl_ratio: float
    wall_clock_seconds: float
    max_abs_value: float
    first_negative_time: float | None
    outputs: tuple[tuple[str, str], ...]  # (file name, sha256 hex)

    def to_text(self) -> str:
        lines = [self.config_text.rstrip("\n")]
        lines.append("# --- run diagnostics ---")
        lines.append(f"# cfl_ratio = {_fmt(self.cfl_ratio)}")
        lines.append(f"# wall_clock_seconds = {_fmt(self.wall_clock_seconds)}")
        lines.append(f"# max_abs_k = {_fmt(self.max_abs_value)}")
        if self.first_negative_time is None:
            lines.append("# first_negative_time = none")
        else:
            lines.append(f"# first_negative_time = {_fmt(self.first_negative_time)}")
        for name, digest in self.outputs:
            lines.append(f"# output = {name} sha256={digest}")
        return "\n".join(lines) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# argument parsing

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would exit(2) with a multi-line message; the contract is
    # exit 1 with exactly one reason line
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="capflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a preset or config file")
    source = p_run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=PRESET_IDS)
    source.add_argument("--config", metavar="PATH")
    p_run.add_argument("--out", metavar="DIR", default=".")
    p_run.add_argument("--delta", type=float)
    p_run.add_argument("--dt", type=float)
    p_run.add_argument("--dx", type=float)
    p_run.add_argument("--t-end", type=float, dest="t_end")
    p_run.add_argument("--stride", type=int)
    p_run.add_argument("--source-form", choices=("consistent", "paper-literal"))
    p_run.add_argument("--right-flux", choices=("local", "left"))

    sub.add_parser("presets", help="list the bundled scenario ids")

    p_eq = sub.add_parser("equilibria", help="stationary capital levels and stability")
    p_eq.add_argument("--delta", type=float, required=True)
    p_eq.add_argument("--s", type=float, default=1.0)
    p_eq.add_argument("--tech-const", type=float, default=1.0, dest="tech_const")

    p_conv = sub.add_parser("converge", help="observed self-convergence order")
    p_conv.add_argument("--preset", choices=PRESET_IDS, required=True)
    p_conv.add_argument("--levels", type=int, default=3)
    p_conv.add_argument("--t-end", type=float, dest="t_end")

    p_val = sub.add_parser("validate", help="check a config file, run nothing")
    p_val.add_argument("--config", metavar="PATH", required=True)
    return parser


def _load_scenario(args) -> ScenarioConfig:
    if getattr(args, "preset", None):
        return preset(args.preset)
    path = Path(args.config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"io-error path={path} ({exc.strerror})") from exc
    return load_config(text)


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if args.delta is not None:
        changes["econ"] = dataclasses.replace(config.econ, delta=args.delta)
    grid = config.grid
    if args.dx is not None:
        if args.dx <= 0:
            raise ConfigError("dx must be positive")
        cells = round(grid.length / args.dx)
        if cells < 1 or abs(cells * args.dx - grid.length) > 1e-9 * grid.length:
            raise ConfigError(f"dx={args.dx:g} does not divide the domain length")
        grid = Grid1D(grid.length, cells)
        changes["grid"] = grid
    if args.dt is not None or args.t_end is not None:
        dt = args.dt if args.dt is not None else config.time.dt
        t_end = args.t_end if args.t_end is not None else config.time.t_end
        changes["time"] = TimeGrid(dt, t_end)
    if args.stride is not None:
        changes["snapshot_stride"] = args.stride
    if args.source_form is not None or args.right_flux is not None:
        opts = config.opts
        if args.source_form is not None:
            opts = dataclasses.replace(opts, source_form=args.source_form)
        if args.right_flux is not None:
            opts = dataclasses.replace(opts, right_flux_argument=args.right_flux)
        changes["opts"] = opts
    if not changes:
        return config
    if "time" in changes and "snapshot_stride" not in changes:
        # horizon changes invalidate a stride derived from the old step count
        changes["snapshot_stride"] = None
    return dataclasses.replace(config, **changes)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_run(args) -> int:
    config = _apply_overrides(_load_scenario(args), args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = _time.perf_counter()
    series = run(config)
    elapsed = _time.perf_counter() - started

    csv_path = write_csv(series, out_dir / f"{config.name}.csv")
    manifest = RunManifest(
        config_text=save_config(config),
        cfl_ratio=cfl_check(config.grid, config.time),
        wall_clock_seconds=elapsed,
        max_abs_value=series.diagnostics.max_abs_value,
        first_negative_time=series.diagnostics.first_negative_time,
        outputs=((csv_path.name, _sha256(csv_path)),),
    )
    # manifest written last: its presence marks a completed run
    manifest_path = out_dir / f"{config.name}.manifest"
    manifest_path.write_text(manifest.to_text(), encoding="utf-8", newline="\n")
    print(f"ok {config.name} snapshots={len(series.snapshots)} csv={csv_path}")
    return 0


def _cmd_presets(_args) -> int:
    for pid in PRESET_IDS:
        print(f"{pid}  {PRESET_DESCRIPTIONS[pid]}")
    return 0


def _cmd_equilibria(args) -> int:
    econ = EconParams(
        delta=args.delta, s=args.s,
        production=ProductionParams(), tech=ConstantTech(args.tech_const),
    )
    report = find_equilibria(econ)
    if report.critical_delta is not None:
        print(f"critical_delta = {_fmt(report.critical_delta)}")
    for root, tag in zip(report.roots, report.stability):
        print(f"root = {_fmt(root)} {tag}")
    return 0


def _cmd_converge(args) -> int:
    config = preset(args.preset)
    if args.t_end is not None:
        config = dataclasses.replace(
            config, time=TimeGrid(config.time.dt, args.t_end), snapshot_stride=None
        )
    result = self_convergence(config, args.levels)
    for dx, d in zip(result.spacings, (None,) + tuple(result.diff_norms)):
        if d is not None:
            print(f"dx = {_fmt(dx)} max_diff_vs_coarser = {_fmt(d)}")
    if result.exact:
        print("observed_order = exact")
    else:
        print(f"observed_order = {_fmt(result.observed_order)}")
    return 0


def _cmd_validate(args) -> int:
    config = _load_scenario(args)
    print(f"ok {config.name}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "presets": _cmd_presets,
    "equilibria": _cmd_equilibria,
    "converge": _cmd_converge,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    """Entry point; returns the documented exit code instead of raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage-error {exc}", file=sys.stderr)
        return USAGE_ERROR

    try:
        return _COMMANDS[args.command](args)
    except StabilityError as exc:
        print(str(exc), file=sys.stderr)
        return NUMERICAL_ERROR
    except (DivergenceError, NegativityError) as exc:
        print(f"numerical-error {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except ParseError as exc:
        print(f"parse-error {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (ConfigError, DomainError) as exc:
        print(f"consistency-error {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except CapflowError as exc:
        print(f"error {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except OSError as exc:
        print(f"io-error {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
