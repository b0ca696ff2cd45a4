"""Tests for the explicit scheme: stencils, diagnostics, conservation,
symmetry and self-convergence.
"""
import dataclasses
import math

import numpy as np
import pytest

from capflow import (
    BoundaryFlux,
    ConstantFlux,
    ConstantTech,
    DivergenceError,
    DomainError,
    EconParams,
    ExponentialTech,
    Field,
    GaussianProfile,
    Grid1D,
    NegativityError,
    ProportionalToLeft,
    ProportionalToLocal,
    ScenarioConfig,
    SolverOptions,
    StabilityError,
    TimeGrid,
    UniformProfile,
    ZeroFlux,
    cfl_check,
    eval_initial,
    ghost_values,
    ode_solve_rk4,
    preset,
    run,
    self_convergence,
    step,
    total_capital,
)

# N=100 trapezoid of the gaussian profile, checked against the frozen
# N=1e5 value (and the closed form 100*sqrt(1000*pi)*erf(50/sqrt(1000))).
GAUSS_TOTAL_FINE = 5462.91971771467

ROOT_TOP = 19.739990523966186


def scenario(name="t", delta=0.05, s=1.0, tech=None, grid=None, time=None,
             initial=None, bc=None, opts=None, stride=None):
    return ScenarioConfig(
        name=name,
        econ=EconParams(delta=delta, s=s, tech=tech or ConstantTech(1.0)),
        grid=grid or Grid1D(100.0, 100),
        time=time or TimeGrid(0.4, 200.0),
        initial=initial if initial is not None else GaussianProfile(100.0, 50.0, 1000.0),
        bc=bc or BoundaryFlux(),
        opts=opts or SolverOptions(),
        snapshot_stride=stride,
    )


# ---------------------------------------------------------------------------
# grids, fields, ratios

class TestGrids:
    def test_grid_basics(self):
        grid = Grid1D(100.0, 100)
        assert grid.dx == 1.0
        assert grid.n_nodes == 101
        assert grid.nodes()[0] == 0.0
        assert grid.nodes()[-1] == 100.0
        assert grid.dx * grid.n_cells == pytest.approx(grid.length, rel=1e-15)

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            Grid1D(0.0, 10)
        with pytest.raises(DomainError):
            Grid1D(100.0, 0)

    def test_time_grid_rounding(self):
        tg = TimeGrid(0.4, 500.0)
        assert tg.n_steps == 1250
        assert abs(tg.n_steps * tg.dt - tg.t_end) <= 0.5 * tg.dt
        assert TimeGrid(0.4, 5.0).n_steps == 12

    def test_time_grid_validation(self):
        with pytest.raises(DomainError):
            TimeGrid(-0.1, 10.0)
        with pytest.raises(DomainError):
            TimeGrid(1.0, 0.4)  # rounds to zero steps

    def test_cfl_examples(self):
        grid = Grid1D(100.0, 100)
        assert cfl_check(grid, TimeGrid(0.4, 10.0)) == pytest.approx(0.4)
        assert cfl_check(grid, TimeGrid(0.5, 10.0)) == pytest.approx(0.5)
        assert cfl_check(grid, TimeGrid(0.6, 10.0)) == pytest.approx(0.6)

    def test_run_refuses_unstable_step(self):
        with pytest.raises(StabilityError) as err:
            scenario(time=TimeGrid(0.6, 10.0))
        assert err.value.ratio == pytest.approx(0.6)
        assert err.value.max_dt == pytest.approx(0.5)

    def test_boundary_ratio_accepted(self):
        cfg = scenario(time=TimeGrid(0.5, 10.0))
        series = run(cfg)
        assert np.isfinite(series.terminal.values).all()


# ---------------------------------------------------------------------------
# ghost values

class TestGhostValues:
    def grid(self):
        return Grid1D(4.0, 4)  # dx = 1

    def field(self, values):
        return Field(np.asarray(values, dtype=float), 0.0)

    def test_sealed_border_mirrors(self):
        f = self.field([1.0, 5.0, 2.0, 7.0, 3.0])
        left, right = ghost_values(f, self.grid(), BoundaryFlux())
        assert left == 5.0
        assert right == 7.0

    def test_left_constant_flux(self):
        f = self.field([1.0, 5.0, 2.0, 7.0, 3.0])
        bc = BoundaryFlux(left=ConstantFlux(0.5))
        left, _ = ghost_values(f, self.grid(), bc)
        assert left == 6.0

    def test_right_constant_flux_enters_negatively(self):
        f = self.field([1.0, 5.0, 2.0, 5.0, 3.0])
        bc = BoundaryFlux(right=ConstantFlux(0.5))
        _, right = ghost_values(f, self.grid(), bc)
        assert right == 4.0

    def test_scale_factors_flip_sign(self):
        f = self.field([1.0, 5.0, 2.0, 5.0, 3.0])
        bc = BoundaryFlux(left=ConstantFlux(0.5), scale_left=-1.0)
        left, _ = ghost_values(f, self.grid(), bc)
        assert left == 4.0

    def test_mismatched_field_rejected(self):
        with pytest.raises(DomainError):
            ghost_values(self.field([1.0, 2.0]), self.grid(), BoundaryFlux())


# ---------------------------------------------------------------------------
# single steps

class TestStep:
    def test_uniform_field_hand_value(self):
        # diffusion vanishes on a uniform field, so one step is
        # 100*(1 - 0.4*0.05) + 0.4*f(100) = 98 + 0.4*50000/50001
        grid = Grid1D(100.0, 100)
        tg = TimeGrid(0.4, 10.0)
        f0 = Field(np.full(101, 100.0), 0.0)
        f1 = step(f0, grid, tg, EconParams(delta=0.05), BoundaryFlux(), SolverOptions(), 0.0)
        expected = 98.0 + 0.4 * (50000.0 / 50001.0)
        assert f1.values == pytest.approx(expected, rel=1e-14)
        assert f1.time_label == pytest.approx(0.4)
        assert round(float(f1.values[0]), 2) == 98.40

    def test_zero_field_is_fixed_point(self):
        grid = Grid1D(100.0, 100)
        tg = TimeGrid(0.4, 10.0)
        f0 = Field(np.zeros(101), 0.0)
        bc = BoundaryFlux(left=ProportionalToLocal(1.0), right=ProportionalToLocal(1.0))
        f1 = step(f0, grid, tg, EconParams(delta=0.05), bc, SolverOptions(), 0.0)
        assert np.all(f1.values == 0.0)

    def test_paper_literal_source_form(self):
        # the literal variant adds dt*s*A and f(k) separately:
        # 100*(1 - 0.02) + 0.4*1 + f(100)
        grid = Grid1D(100.0, 100)
        tg = TimeGrid(0.4, 10.0)
        f0 = Field(np.full(101, 100.0), 0.0)
        opts = SolverOptions(source_form="paper-literal")
        f1 = step(f0, grid, tg, EconParams(delta=0.05), BoundaryFlux(), opts, 0.0)
        expected = 98.0 + 0.4 + 50000.0 / 50001.0
        assert f1.values == pytest.approx(expected, rel=1e-14)

    def test_step_matches_run_prefix(self):
        cfg = scenario(stride=1, time=TimeGrid(0.4, 2.0))
        series = run(cfg)
        grid, tg = cfg.grid, cfg.time
        f = series.snapshots[0]
        for i in range(1, len(series.snapshots)):
            f = step(f, grid, tg, cfg.econ, cfg.bc, cfg.opts, (i - 1) * tg.dt)
            assert np.array_equal(f.values, series.snapshots[i].values)

    def test_per_step_flux_balance(self):
        # with s=0 and delta=0 one step moves total capital by exactly
        # dt*(scale_left*h_left(k_0) + scale_right*h_right(k_N))
        grid = Grid1D(100.0, 100)
        tg = TimeGrid(0.4, 10.0)
        econ = EconParams(delta=0.0, s=0.0)
        k0 = eval_initial(GaussianProfile(100.0, 50.0, 1000.0), grid.nodes(), 100.0)
        cases = [
            BoundaryFlux(ConstantFlux(0.8), ConstantFlux(0.3)),
            BoundaryFlux(ConstantFlux(0.8), ConstantFlux(0.8), -1.0, -1.0),
            BoundaryFlux(ProportionalToLocal(0.2), ProportionalToLocal(0.1), 1.0, -1.0),
            BoundaryFlux(ZeroFlux(), ZeroFlux()),
        ]
        for bc in cases:
            f0 = Field(k0.copy(), 0.0)
            before = total_capital(f0, grid)
            left_h = 0.0 if isinstance(bc.left, ZeroFlux) else (
                bc.left.value if isinstance(bc.left, ConstantFlux) else bc.left.coeff * k0[0])
            right_h = 0.0 if isinstance(bc.right, ZeroFlux) else (
                bc.right.value if isinstance(bc.right, ConstantFlux) else bc.right.coeff * k0[-1])
            expected = tg.dt * (bc.scale_left * left_h + bc.scale_right * right_h)
            f1 = step(f0, grid, tg, econ, bc, SolverOptions(), 0.0)
            change = total_capital(f1, grid) - before
            assert change == pytest.approx(expected, abs=1e-10 * max(1.0, before))


# ---------------------------------------------------------------------------
# whole runs

class TestRun:
    def test_high_depreciation_decays_to_nothing(self):
        series = run(preset("fig1b"))
        assert series.maxima[-1] < 1e-3
        assert series.snapshots[0].time_label == 0.0
        assert np.all(series.snapshots[0].values == 100.0)

    def test_low_depreciation_reaches_upper_equilibrium(self):
        series = run(preset("fig1a"))
        assert series.terminal.values[50] == pytest.approx(ROOT_TOP, abs=1e-3)

    def test_zero_start_stays_zero(self):
        cfg = scenario(initial=UniformProfile(0.0), time=TimeGrid(0.4, 50.0))
        series = run(cfg)
        assert all(np.all(f.values == 0.0) for f in series.snapshots)

    def test_snapshot_times_strictly_increase(self):
        series = run(preset("fig3a"))
        times = series.times
        assert np.all(np.diff(times) > 0)

    def test_uniformity_preserved_and_matches_lumped_oracle(self):
        # sealed borders + uniform start stays uniform to the last bit,
        # and the nodal trajectory tracks the lumped RK4 solution
        cfg = scenario(
            delta=0.05,
            initial=UniformProfile(100.0),
            time=TimeGrid(1e-4, 50.0),
            stride=10_000,
        )
        series = run(cfg)
        spreads = series.maxima - series.minima
        assert np.all(spreads <= 1e-12 * np.maximum(series.maxima, 1e-300))
        sol = ode_solve_rk4(EconParams(delta=0.05), 100.0, 50.0, 1e-3)
        for t in (1.0, 10.0, 50.0):
            pde = series.snapshots[round(t / (1e-4 * 10_000))].values[0]
            ref = sol.values[round(t / 1e-3)]
            assert abs(pde - ref) / abs(ref) < 1e-4

    def test_conservation_with_sealed_borders(self):
        cfg = scenario(s=0.0, delta=0.0, time=TimeGrid(0.4, 400.0), stride=1000)
        series = run(cfg)
        totals = series.totals
        assert np.all(np.abs(totals - totals[0]) <= 1e-10 * totals[0])

    def test_symmetric_scenarios_stay_symmetric(self):
        for pid in ("fig3a", "fig4b", "fig5a"):
            series = run(preset(pid))
            for f in series.snapshots:
                assert np.max(np.abs(f.values - f.values[::-1])) <= 1e-12

    def test_right_flux_argument_coincides_on_symmetric_runs(self):
        cfg = preset("fig5a")
        literal = dataclasses.replace(
            cfg, opts=SolverOptions(right_flux_argument="left")
        )
        a = run(cfg).terminal.values
        b = run(literal).terminal.values
        assert np.array_equal(a, b)

    def test_proportional_to_left_law_uses_left_border(self):
        # same scenario expressed through the left-referencing law
        cfg = preset("fig5a")
        aliased = dataclasses.replace(
            cfg,
            bc=dataclasses.replace(cfg.bc, right=ProportionalToLeft(1.0)),
        )
        assert np.array_equal(run(cfg).terminal.values, run(aliased).terminal.values)

    def test_monotone_decay_above_threshold(self):
        series = run(preset("fig1b"))
        maxima = series.maxima
        assert np.all(np.diff(maxima) <= 0.0)
        assert maxima[1] < maxima[0]

    def test_negativity_reported_not_clamped(self):
        series = run(preset("fig4a"))
        diag = series.diagnostics
        assert diag.first_negative_time is not None
        assert diag.first_negative_node in (0, 100)
        assert series.minima[-1] < 0.0  # values really go negative

    def test_negativity_abort_policy(self):
        cfg = dataclasses.replace(
            preset("fig4a"), opts=SolverOptions(negativity_policy="abort")
        )
        with pytest.raises(NegativityError) as err:
            run(cfg)
        assert err.value.step is not None and err.value.node is not None

    def test_divergence_carries_location(self):
        # saturated production under exp(t) tech overflows the float range
        cfg = scenario(
            delta=0.0,
            tech=ExponentialTech(1.0),
            grid=Grid1D(100.0, 4),
            time=TimeGrid(0.4, 800.0),
            initial=UniformProfile(100.0),
        )
        with pytest.raises(DivergenceError) as err:
            run(cfg)
        assert err.value.step is not None

    def test_deterministic_reruns(self):
        a = run(preset("fig3b"))
        b = run(preset("fig3b"))
        for fa, fb in zip(a.snapshots, b.snapshots):
            assert np.array_equal(fa.values, fb.values)


# ---------------------------------------------------------------------------
# diagnostics

class TestTotalCapital:
    def test_uniform_exact(self):
        grid = Grid1D(100.0, 100)
        assert total_capital(Field(np.full(101, 100.0), 0.0), grid) == 10000.0

    def test_linear_exact(self):
        grid = Grid1D(100.0, 100)
        assert total_capital(Field(grid.nodes(), 0.0), grid) == 5000.0

    def test_gaussian_against_fine_quadrature(self):
        prof = GaussianProfile(100.0, 50.0, 1000.0)
        coarse = Grid1D(100.0, 100)
        fine = Grid1D(100.0, 100_000)
        coarse_total = total_capital(
            Field(eval_initial(prof, coarse.nodes(), 100.0), 0.0), coarse)
        fine_total = total_capital(
            Field(eval_initial(prof, fine.nodes(), 100.0), 0.0), fine)
        assert fine_total == pytest.approx(GAUSS_TOTAL_FINE, rel=1e-12)
        assert coarse_total == pytest.approx(GAUSS_TOTAL_FINE, rel=5e-5)

    def test_closed_form_cross_check(self):
        span = 50.0 / math.sqrt(1000.0)
        exact = 100.0 * math.sqrt(1000.0 * math.pi) * math.erf(span)
        assert exact == pytest.approx(GAUSS_TOTAL_FINE, rel=1e-9)


# ---------------------------------------------------------------------------
# self-convergence

class TestSelfConvergence:
    def test_second_order_on_smooth_scenario(self):
        cfg = dataclasses.replace(preset("fig3b"), time=TimeGrid(0.4, 5.0),
                                  snapshot_stride=None)
        result = self_convergence(cfg, 3)
        assert not result.exact
        assert 1.7 <= result.observed_order <= 2.3

    def test_constant_solution_is_exact(self):
        cfg = scenario(s=0.0, delta=0.0, initial=UniformProfile(100.0),
                       time=TimeGrid(0.4, 5.0))
        result = self_convergence(cfg, 3)
        assert result.exact
        assert result.observed_order is None
        assert result.diff_norms == (0.0, 0.0)

    def test_needs_three_levels(self):
        from capflow import ConfigError
        with pytest.raises(ConfigError):
            self_convergence(preset("fig3b"), 2)
