"""Constrained gradient flow, Newton polish, and the mass thresholds."""

import numpy as np
import pytest

from normwave.flow import (
    Classification,
    FlowConfig,
    MassThresholds,
    flow_step,
    gaussian_seed,
    lambda_hat,
    newton_constrained,
    newton_free,
    report_to_json,
    solve_global,
    solve_local,
)
from normwave.radial_field import (
    RadialGrid,
    energy,
    kinetic,
    mass,
    multiplier,
    regrid,
    residual,
    scale_mass,
)
from normwave.shooting import find_ground_state


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            FlowConfig(dt=-1.0)
        with pytest.raises(ValueError):
            FlowConfig(tol=1e-2)
        with pytest.raises(ValueError):
            FlowConfig(max_steps=0)

    def test_vanishing_floor_defaults(self):
        assert FlowConfig().floor() == 0.0
        assert FlowConfig(rho_hat=0.2).floor() == pytest.approx(0.02)
        assert FlowConfig(rho_hat=0.2, spread_kinetic_floor=0.5).floor() == 0.5

    def test_lambda_hat(self):
        assert lambda_hat(0.2, 3) == pytest.approx(0.2 / 4.0)
        assert lambda_hat(0.2, 2) == pytest.approx(0.2 / 4.0)
        assert lambda_hat(0.2, 5) == pytest.approx(0.2 / 5.0)


class TestFlowStep:
    def test_energy_decreases_and_mass_fixed(self, cq3):
        g = RadialGrid(3, 96.0, 2048)
        u = gaussian_seed(g, 4.0, 260.0)
        e0 = energy(u, cq3).energy
        v = flow_step(u, cq3, 1e-2)
        assert mass(v) == pytest.approx(260.0, rel=1e-12)
        assert energy(v, cq3).energy < e0

    def test_invalid_step(self, cq3):
        g = RadialGrid(3, 96.0, 1024)
        with pytest.raises(ValueError):
            flow_step(gaussian_seed(g, 4.0, 10.0), cq3, 0.0)


class TestNewton:
    def test_free_newton_polishes_shot(self, cq3):
        g = RadialGrid(3, 120.0, 2048)
        res = find_ground_state(cq3, 0.1, g)
        noisy = res.profile.values * (1.0 + 1e-3 * np.sin(g.r))
        from normwave.radial_field import RealField
        u, res_norm, ok = newton_free(RealField(g, noisy), cq3, 0.1)
        assert ok and res_norm < 1e-10 * max(1.0, kinetic(u))

    def test_constrained_newton_full_step_mode(self, cq3):
        g = RadialGrid(3, 120.0, 2048)
        res = find_ground_state(cq3, 0.1, g)
        m = mass(res.profile)
        from normwave.radial_field import RealField
        noisy = RealField(g, res.profile.values * (1.0 + 5e-3 * np.cos(g.r / 7)))
        u, mu, res_norm, ok = newton_constrained(noisy, cq3, m, backtrack=False)
        assert ok
        assert mass(u) == pytest.approx(m, rel=1e-9)
        assert mu == pytest.approx(0.1, abs=1e-3)


class TestSolveGlobal:
    def test_supercritical_mass_converges_negative(self, cq3, sweep_grid,
                                                   thresholds200):
        cfg = FlowConfig(grid=sweep_grid, rho_hat=thresholds200.rho_hat)
        rep = solve_global(cq3, 300.0, cfg)
        assert rep.classification is Classification.CONVERGED_CRITICAL
        assert rep.functionals.energy == pytest.approx(-1.851009, rel=1e-4)
        assert rep.multiplier == pytest.approx(0.0684891, rel=1e-4)
        assert rep.residual <= 1e-6 * rep.scale
        assert rep.functionals.mass == pytest.approx(300.0, rel=1e-9)

    def test_subcritical_mass_vanishes(self, cq3, sweep_grid, thresholds200):
        cfg = FlowConfig(grid=sweep_grid, rho_hat=thresholds200.rho_hat)
        rep = solve_global(cq3, 150.0, cfg)
        assert rep.classification is Classification.VANISHED
        assert rep.multiplier < 0.0


class TestThresholds:
    def test_ordering_and_ranges(self, thresholds200):
        th = thresholds200
        assert isinstance(th, MassThresholds)
        assert 0.0 < th.mstarstar < th.mstar
        assert th.mstar == pytest.approx(240.43, rel=2e-3)
        assert th.mstarstar == pytest.approx(238.64, rel=2e-3)
        assert 0.1 < th.rho_hat < 0.3

    def test_reference_sits_just_above_threshold(self, thresholds200, cq3):
        th = thresholds200
        assert mass(th.reference) == pytest.approx(1.001 * th.mstar, rel=1e-6)
        assert energy(th.reference, cq3).energy < 0.0

    def test_local_solve_inside_window(self, cq3, sweep_grid, thresholds200):
        th = thresholds200
        m = 0.5 * (th.mstarstar + th.mstar)
        cfg = FlowConfig(grid=sweep_grid, rho_hat=th.rho_hat)
        seed = scale_mass(regrid(th.reference, sweep_grid), m)
        rep = solve_local(cq3, m, cfg, seed)
        assert rep.classification is Classification.CONVERGED_CRITICAL
        assert rep.functionals.energy > 0.0
        assert rep.multiplier > 0.0
        assert kinetic(rep.final) > 4.0 * th.rho_hat


class TestSerialization:
    def test_report_roundtrip_keys(self, cq3, sweep_grid, thresholds200,
                                   tmp_path):
        cfg = FlowConfig(grid=sweep_grid, rho_hat=thresholds200.rho_hat)
        rep = solve_global(cq3, 300.0, cfg)
        doc = report_to_json(rep, path=tmp_path / "rep.json",
                             field_csv=tmp_path / "rep_field.csv")
        assert doc["classification"] == "ConvergedCritical"
        assert set(doc["functionals"]) == {"mass", "kinetic", "potential",
                                           "energy", "pohozaev"}
        assert (tmp_path / "rep.json").exists()
        assert (tmp_path / "rep_field.csv").exists()
