"""Schrodinger propagation: unitarity, phase rotation, and the probe."""

import numpy as np
import pytest

from normwave.dynamics import (
    ComplexField,
    StabilityVerdict,
    Trajectory,
    Verdict,
    _probe_bump,
    cmass,
    evolve,
    from_real,
    h1_norm,
    hamiltonian,
    phase_distance,
    stability_probe,
)
from normwave.radial_field import RadialGrid, RealField, random_smooth_fields
from normwave.shooting import find_ground_state


@pytest.fixture(scope="module")
def small_grid():
    return RadialGrid(3, 120.0, 2048)


@pytest.fixture(scope="module")
def soliton(cq3, small_grid):
    return find_ground_state(cq3, 0.1, small_grid)


class TestComplexField:
    def test_nonfinite_values_rejected(self, small_grid):
        vals = np.zeros(small_grid.n, dtype=np.complex128)
        vals[5] = np.nan
        with pytest.raises(ValueError):
            ComplexField(small_grid, vals)
        vals[5] = 1.0 + 1j * np.inf
        with pytest.raises(ValueError):
            ComplexField(small_grid, vals)

    def test_shape_mismatch_rejected(self, small_grid):
        with pytest.raises(ValueError):
            ComplexField(small_grid, np.zeros(small_grid.n - 1))

    def test_from_real_promotes_dtype(self, soliton):
        psi = from_real(soliton.profile)
        assert psi.values.dtype == np.complex128
        assert np.array_equal(psi.values.real, soliton.profile.values)
        assert not psi.values.imag.any()

    def test_phase_distance_gauge_invariance(self, soliton):
        u = soliton.profile
        rotated = ComplexField(u.grid, np.exp(0.7j) * u.values)
        assert phase_distance(rotated, u) <= 1e-10 * h1_norm(from_real(u))


class TestEvolve:
    def test_argument_validation(self, cq3, cq2, small_grid):
        psi = ComplexField(small_grid, np.zeros(small_grid.n))
        with pytest.raises(ValueError):
            evolve(psi, 1.0, 0.0, cq3)
        with pytest.raises(ValueError):
            evolve(psi, -1.0, 1e-2, cq3)
        with pytest.raises(ValueError):
            evolve(psi, 1.0, 1e-2, cq2)

    def test_zero_field_stays_zero(self, cq3, small_grid):
        psi = ComplexField(small_grid, np.zeros(small_grid.n))
        traj = evolve(psi, 1.0, 1e-2, cq3)
        assert np.all(traj.final.values == 0.0)
        assert np.all(traj.mass == 0.0)

    def test_zero_horizon_returns_initial_state(self, cq3, soliton):
        psi = from_real(soliton.profile)
        traj = evolve(psi, 0.0, 1e-2, cq3)
        assert traj.times.tolist() == [0.0]
        assert np.array_equal(traj.final.values, psi.values)

    def test_snapshots_cadence(self, cq3, soliton):
        psi = from_real(soliton.profile)
        traj = evolve(psi, 0.1, 1e-3, cq3, snap_every=50)
        assert len(traj.snapshots) == 3
        assert [t for t, _ in traj.snapshots] == pytest.approx([0.0, 0.05, 0.1])

    def test_standing_wave_conservation(self, cq3, soliton):
        psi = from_real(soliton.profile)
        traj = evolve(psi, 5.0, 1e-3, cq3)
        m0, e0 = traj.mass[0], traj.energy[0]
        assert np.max(np.abs(traj.mass - m0)) <= 1e-12 * m0
        assert np.max(np.abs(traj.energy - e0)) <= 1e-6 * max(1.0, abs(e0))

    def test_standing_wave_phase_rotation(self, cq3, soliton):
        # a standing wave evolves as e^{i omega t} u, so the weighted
        # pairing with u accumulates exactly the phase omega t
        u = soliton.profile
        T = 1.0
        traj = evolve(from_real(u), T, 1e-3, cq3)
        inner = complex(np.dot(u.grid.w, u.values * traj.final.values))
        assert np.angle(inner) == pytest.approx(soliton.omega * T, abs=1e-4)

    def test_conjugation_reverses_time(self, cq3, small_grid):
        a, b = random_smooth_fields(small_grid, 2, seed=11)
        psi0 = ComplexField(small_grid, a.values + 0.5j * b.values)
        fwd = evolve(psi0, 2.0, 1e-2, cq3)
        back = evolve(ComplexField(small_grid, np.conj(fwd.final.values)),
                      2.0, 1e-2, cq3)
        diff = ComplexField(small_grid,
                            np.conj(back.final.values) - psi0.values)
        assert h1_norm(diff) <= 1e-8 * h1_norm(psi0)

    def test_mass_unitarity_long_run(self, cq3, small_grid):
        a, b = random_smooth_fields(small_grid, 2, seed=23)
        psi0 = ComplexField(small_grid, a.values + 1j * b.values)
        traj = evolve(psi0, 10.0, 1e-3, cq3)
        m0 = traj.mass[0]
        assert np.max(np.abs(traj.mass - m0)) <= 1e-10 * m0


class TestStabilityProbe:
    def test_probe_bump_shape(self, small_grid):
        bump = _probe_bump(small_grid)
        assert bump[0] == pytest.approx(2.0, abs=1e-3)
        assert np.all(np.diff(bump) < 0.0)

    def test_argument_validation(self, cq3, soliton):
        with pytest.raises(ValueError):
            stability_probe(soliton, -0.01, 1.0, 1e-3, cq3)
        with pytest.raises(ValueError):
            stability_probe(soliton, 0.2, 1.0, 1e-3, cq3)
        with pytest.raises(ValueError):
            stability_probe(soliton, 0.01, 1.0, 1e-3, cq3, factor=0.0)

    def test_unperturbed_orbit_stays_close(self, cq3, soliton):
        verdict = stability_probe(soliton, 0.0, 1.0, 1e-3, cq3)
        assert verdict.verdict is Verdict.STAYS_CLOSE
        assert verdict.max_distance <= 1e-6
        assert verdict.times[0] == 0.0 and verdict.times[-1] == 1.0

    def test_verdict_consistency_enforced(self):
        times = np.array([0.0, 1.0])
        with pytest.raises(AssertionError):
            StabilityVerdict(epsilon=0.01, horizon=1.0, max_distance=5.0,
                             threshold=1.0, verdict=Verdict.STAYS_CLOSE,
                             times=times, distances=np.array([0.0, 5.0]))
        with pytest.raises(AssertionError):
            StabilityVerdict(epsilon=0.01, horizon=1.0, max_distance=0.5,
                             threshold=1.0, verdict=Verdict.STAYS_CLOSE,
                             times=times, distances=np.array([-0.1, 0.5]))


class TestCsvSchemas:
    def test_trajectory_csv(self, cq3, soliton, tmp_path):
        traj = evolve(from_real(soliton.profile), 0.1, 1e-2, cq3)
        out = tmp_path / "traj.csv"
        traj.to_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,mass,energy"
        assert len(lines) == 1 + len(traj.times)
        assert all(len(line.split(",")) == 3 for line in lines[1:])

    def test_verdict_csv(self, cq3, soliton, tmp_path):
        verdict = stability_probe(soliton, 0.0, 0.5, 1e-2, cq3)
        out = tmp_path / "dist.csv"
        verdict.to_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,distance"
        assert len(lines) == 1 + len(verdict.times)
