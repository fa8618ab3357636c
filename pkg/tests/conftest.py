"""Shared fixtures: models, grids, and the expensive session-wide solves.

The threshold computation, the broad-box solution curve, the three saddle
relaxations, and the mass-matched branch representatives are all computed
once per session and shared between the unit files and the acceptance
suite, so the overall runtime stays within the per-check budgets.
"""

import numpy as np
import pytest

from normwave.model import NonlinearityModel
from normwave.radial_field import RadialGrid
from normwave.shooting import Branch, find_ground_state, find_nodal_state, \
    match_mass, sweep_curve
from normwave.flow import FlowConfig, compute_thresholds
from normwave.minimax import saddle_report


@pytest.fixture(scope="session")
def cq3():
    return NonlinearityModel.cubic_quintic(3)


@pytest.fixture(scope="session")
def cq2():
    return NonlinearityModel.cubic_quintic(2)


@pytest.fixture(scope="session")
def sweep_grid():
    # covers the slow tails at omega = 0.01 and the wide droplet at 0.18
    return RadialGrid(3, 200.0, 4096)


@pytest.fixture(scope="session")
def minimax_grid():
    # roomy enough for the spreading dilation of the admissible paths
    return RadialGrid(3, 768.0, 16384)


@pytest.fixture(scope="session")
def dyn_grid():
    return RadialGrid(3, 256.0, 4096)


@pytest.fixture(scope="session")
def thresholds200(cq3, sweep_grid):
    return compute_thresholds(cq3, sweep_grid)


@pytest.fixture(scope="session")
def curve768(cq3, minimax_grid):
    """Solution curve sampled on the broad box, both families covered."""
    freqs = sorted(set(np.geomspace(0.002, 0.06, 12)) | {0.08, 0.11, 0.15, 0.175})
    return sweep_curve(cq3, freqs, minimax_grid)


@pytest.fixture(scope="session")
def ground_states(cq3, sweep_grid):
    """The five frequencies inside the existence window."""
    return {om: find_ground_state(cq3, om, sweep_grid)
            for om in (0.02, 0.05, 0.10, 0.15, 0.18)}


@pytest.fixture(scope="session")
def nodal_states(cq3, sweep_grid):
    """Zero-, one-, and two-node profiles at one fixed frequency."""
    return {k: find_nodal_state(cq3, 0.05, k, sweep_grid) for k in (0, 1, 2)}


@pytest.fixture(scope="session")
def saddle_masses(thresholds200):
    th = thresholds200
    mid = 0.5 * (th.mstarstar + th.mstar)
    return (th.mstar, 1.5 * th.mstar, mid)


@pytest.fixture(scope="session")
def saddle_reports(cq3, minimax_grid, thresholds200, curve768, saddle_masses):
    cfg = FlowConfig(grid=minimax_grid, rho_hat=thresholds200.rho_hat)
    return {m: saddle_report(cq3, m, minimax_grid, thresholds=thresholds200,
                             curve=curve768, config=cfg)
            for m in saddle_masses}


@pytest.fixture(scope="session")
def stable_rep(cq3, dyn_grid, thresholds200):
    """Minimizer-family representative inside the local-well mass window."""
    th = thresholds200
    return match_mass(cq3, 0.5 * (th.mstarstar + th.mstar), Branch.LOW_OMEGA,
                      dyn_grid)


@pytest.fixture(scope="session")
def mp_rep(cq3, dyn_grid):
    """Mountain-pass-family representative used by the stability probes."""
    return find_ground_state(cq3, 0.016, dyn_grid)
