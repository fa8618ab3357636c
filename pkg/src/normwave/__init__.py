"""Mass-normalized standing waves of focusing-defocusing NLS equations.

Solvers for radial profiles of -lap u + mu u = f(u) with the mass
||u||_2^2 = m held fixed: amplitude shooting along the frequency curve,
projected gradient flow to global and local constrained minimizers,
a dropping-path relaxation for mountain-pass saddles, and a split-step
Schrodinger integrator that probes the orbital stability of the computed
waves.
"""

__version__ = "0.1.0"

from .model import (
    HypothesisError,
    HypothesisReport,
    ModelKind,
    NonlinearityModel,
    check_hypotheses,
)
from .radial_field import (
    Functionals,
    NoConvergenceError,
    RadialGrid,
    RealField,
    energy,
    estimate_rho,
)
from .shooting import (
    Branch,
    NoBracketError,
    ShootResult,
    find_ground_state,
    find_nodal_state,
    match_mass,
    sweep_curve,
)
from .flow import (
    Classification,
    FlowConfig,
    MassThresholds,
    SolveReport,
    compute_thresholds,
    solve_global,
    solve_local,
)
from .minimax import (
    MountainPassReport,
    NoAdmissiblePathError,
    saddle_report,
)
from .dynamics import (
    ComplexField,
    StabilityVerdict,
    Trajectory,
    Verdict,
    evolve,
    stability_probe,
)

__all__ = [
    "Branch",
    "Classification",
    "ComplexField",
    "FlowConfig",
    "Functionals",
    "HypothesisError",
    "HypothesisReport",
    "MassThresholds",
    "ModelKind",
    "MountainPassReport",
    "NoAdmissiblePathError",
    "NoBracketError",
    "NoConvergenceError",
    "NonlinearityModel",
    "RadialGrid",
    "RealField",
    "ShootResult",
    "SolveReport",
    "StabilityVerdict",
    "Trajectory",
    "Verdict",
    "check_hypotheses",
    "compute_thresholds",
    "energy",
    "estimate_rho",
    "evolve",
    "find_ground_state",
    "find_nodal_state",
    "match_mass",
    "saddle_report",
    "solve_global",
    "solve_local",
    "stability_probe",
    "sweep_curve",
    "__version__",
]
