"""Mountain-pass solver on discrete paths over the mass sphere.

The positive-energy saddle between the spreading well (small kinetic
energy, energy near zero from below the barrier) and the solitonic well
(the minimizer with large kinetic energy) is located by the dropping-path
method: start from a dilation fiber of an admissible terminal state, then
repeatedly lower every interior node by a short mass-projected descent
step while both endpoints stay frozen in their wells.  The path drapes
itself across the ridge, the running maximum of the constrained energy
decreases monotonically toward the pass level, and the node sitting on
the ridge is finally polished by a bordered Newton iteration into a
genuine constrained critical point.

Admissibility of a path is the discrete version of the barrier geometry:
the first node lies deep inside the small-gradient region (kinetic below
the certified threshold rho), the last node lies beyond it (kinetic above
4 rho), and both endpoint energies stay below rho/2.  Any such path must
cross the shell where the certified lower bound I >= kinetic/4 is active,
which pins the pass level above rho and makes the reported level a
bracketed quantity: the relaxed path maximum from above, rho from below.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .flow import (
    Classification,
    FlowConfig,
    MassThresholds,
    SolveReport,
    compute_thresholds,
    flow_step,
    newton_constrained,
    solve_global,
)
from .model import NonlinearityModel
from .radial_field import (
    NoConvergenceError,
    RadialGrid,
    RealField,
    dilate,
    energy,
    estimate_rho,
    kinetic,
    mass,
    regrid,
    scale_mass,
)
from .shooting import Branch, NoBracketError, match_mass

_MIN_SEGMENTS = 8           # a path needs at least this many segments
_MASS_TOL = 1e-10           # relative mass deviation allowed on any node
_LEVEL_SLACK = 1e-10        # arithmetic slack in the monotone-level check
_BARRIER_SLACK = 1e-8       # slack in the level >= rho lower-bound check
_POLISH_RESIDUAL = 1e-5     # residual target for the polished argmax node
_POHOZAEV_BOUND = 1e-6      # |P| <= bound * kinetic for a Converged report
_STALL_WINDOW = 50          # iterations against which stagnation is measured
_STALL_DROP = 1e-8          # relative level decrease still counted as progress
_REDISTRIBUTE_EVERY = 10    # iterations between arclength redistributions


class NoAdmissiblePathError(NoBracketError):
    """No terminal state with the required kinetic/energy signature exists."""


@dataclass(frozen=True)
class DiscretePath:
    m: float                        # common mass of every node
    nodes: tuple[RealField, ...]    # K+1 fields from the spreading well out
    rho_hat: float                  # barrier threshold the class is built on
    kinetic_start: float            # cached kinetic energy of nodes[0]
    kinetic_end: float              # cached kinetic energy of nodes[-1]
    energy_start: float             # cached I at nodes[0]
    energy_end: float               # cached I at nodes[-1]

    def __post_init__(self):
        if len(self.nodes) < _MIN_SEGMENTS + 1:
            raise ValueError(
                f"a path needs at least {_MIN_SEGMENTS + 1} nodes, "
                f"got {len(self.nodes)}")
        if not (self.m > 0.0 and self.rho_hat > 0.0):
            raise ValueError("mass and rho must be positive")
        if not (self.kinetic_start < self.rho_hat):
            raise AssertionError(
                f"inadmissible path: starting kinetic {self.kinetic_start:.6g} "
                f"not below rho {self.rho_hat:.6g}")
        if not (self.kinetic_end > 4.0 * self.rho_hat):
            raise AssertionError(
                f"inadmissible path: terminal kinetic {self.kinetic_end:.6g} "
                f"not above 4 rho {4.0 * self.rho_hat:.6g}")
        if not (max(self.energy_start, self.energy_end) < 0.5 * self.rho_hat):
            raise AssertionError(
                "inadmissible path: endpoint energy reaches rho/2 "
                f"({self.energy_start:.6g}, {self.energy_end:.6g} vs "
                f"{0.5 * self.rho_hat:.6g})")
        for j, node in enumerate(self.nodes):
            if abs(mass(node) - self.m) > _MASS_TOL * self.m:
                raise AssertionError(
                    f"node {j} is off the mass sphere: {mass(node)!r} vs "
                    f"{self.m!r}")

    @property
    def segments(self) -> int:
        return len(self.nodes) - 1

    def barrier_index(self) -> int | None:
        """Index of a node inside the crossing shell kinetic ~ 4 rho, if any.

        The shell halfwidth is the per-segment resolution 1/K of the path;
        a freshly built dilation fiber usually steps over the shell, so a
        witness normally appears only after refine_barrier_witness.
        """
        target = 4.0 * self.rho_hat
        width = target / self.segments
        for j, node in enumerate(self.nodes):
            if abs(kinetic(node) - target) <= width:
                return j
        return None


def _checked_path(m: float, nodes: list[RealField], rho_hat: float,
                  model: NonlinearityModel) -> DiscretePath:
    """Assemble a DiscretePath, computing the admissibility cache."""
    e0 = energy(nodes[0], model)
    e1 = energy(nodes[-1], model)
    return DiscretePath(
        m=m, nodes=tuple(nodes), rho_hat=rho_hat,
        kinetic_start=e0.kinetic, kinetic_end=e1.kinetic,
        energy_start=e0.energy, energy_end=e1.energy)


@dataclass(frozen=True)
class MountainPassReport:
    mass: float
    level: float                    # pass-level estimate E_mp
    rho_hat: float                  # lower barrier the level is checked against
    candidate: RealField            # argmax node before polishing
    polished: SolveReport           # bordered-Newton polish of the candidate
    trace: np.ndarray               # per-iteration maximum of I over the nodes
    match_energy: float | None = None      # I of the equal-mass shooting state
    match_rel_error: float | None = None   # relative gap between the two levels

    def __post_init__(self):
        if not (self.level >= self.rho_hat - _BARRIER_SLACK):
            raise AssertionError(
                f"pass level {self.level:.6g} dropped below the barrier "
                f"bound {self.rho_hat:.6g}")


def _rho_for_mass(model: NonlinearityModel, m: float, grid: RadialGrid,
                  thresholds: MassThresholds) -> float:
    """Barrier threshold for the path class at mass m.

    Below the global threshold the class is defined against the fixed
    value certified at the threshold mass; at or above it, against the
    (smaller) value certified at m itself.
    """
    if m < thresholds.mstar:
        return thresholds.rho_hat
    return estimate_rho(model, m, grid)


def _terminal_state(model: NonlinearityModel, m: float, grid: RadialGrid,
                    thresholds: MassThresholds, rho_hat: float,
                    config: FlowConfig | None) -> RealField:
    """Terminal field with kinetic > 4 rho and I < rho/2, or an error.

    For masses at or above the global threshold this is the global
    minimizer (computed by a continuation-seeded flow); between the two
    thresholds it is the mass-rescaled threshold minimizer itself.  Below
    the local threshold no state with that signature exists and the class
    of admissible paths is empty.
    """
    if m <= thresholds.mstarstar:
        raise NoAdmissiblePathError(
            f"no admissible terminal state at mass {m:.6g}: every candidate "
            f"below the local threshold {thresholds.mstarstar:.6g} has "
            "energy at or above rho/2")
    seed = scale_mass(regrid(thresholds.reference, grid), m)
    if m >= thresholds.mstar:
        base = config or FlowConfig()
        cfg = FlowConfig(dt=base.dt, max_steps=base.max_steps, tol=base.tol,
                         rho_hat=rho_hat, grid=grid, dt_max=base.dt_max,
                         newton=base.newton)
        rep = solve_global(model, m, cfg, seed)
        if rep.classification is not Classification.CONVERGED_CRITICAL:
            raise NoConvergenceError(
                f"global minimizer flow did not converge at mass {m:.6g}: "
                f"{rep.classification.value}")
        u = rep.final
    else:
        u = seed
    fn = energy(u, model)
    if not (fn.kinetic > 4.0 * rho_hat and fn.energy < 0.5 * rho_hat):
        raise NoAdmissiblePathError(
            f"terminal state at mass {m:.6g} misses the admissible "
            f"signature: kinetic {fn.kinetic:.6g} (needs > {4.0 * rho_hat:.6g}), "
            f"I {fn.energy:.6g} (needs < {0.5 * rho_hat:.6g})")
    return u


def build_admissible_path(model: NonlinearityModel, m: float, grid: RadialGrid,
                          thresholds: MassThresholds | None = None,
                          segments: int = 32,
                          config: FlowConfig | None = None) -> DiscretePath:
    """Dilation-fiber path from the spreading well to the terminal state.

    The terminal state u is squeezed by a negative dilation lambda until
    its kinetic energy falls below rho/4 and its potential integral below
    rho/4 in magnitude (so its energy sits safely below rho/2), and the
    path samples the fiber dilate(u, lambda (1 - j/K)) for j = 0..K.
    Every node is re-projected to the mass sphere to absorb resampling
    error.
    """
    if segments < _MIN_SEGMENTS:
        raise ValueError(f"need at least {_MIN_SEGMENTS} segments")
    if thresholds is None:
        thresholds = compute_thresholds(model, grid, config)
    rho_hat = _rho_for_mass(model, m, grid, thresholds)
    u = _terminal_state(model, m, grid, thresholds, rho_hat, config)

    kin_u = kinetic(u)
    cap = 0.25 * rho_hat

    def try_lambda(lam_try: float) -> RealField | None:
        cand = scale_mass(dilate(u, lam_try), m)
        fn = energy(cand, model)
        if fn.kinetic < cap and abs(fn.potential) < cap:
            return cand
        return None

    # Nominal squeeze puts the starting kinetic at rho/8.  On a finite grid
    # a deep dilation can push the profile tail into the boundary, and the
    # Dirichlet ghost then inflates the kinetic term; scanning shallower
    # trades squeeze depth against fit until both rho/4 marks clear.
    lam_nominal = 0.5 * np.log(0.125 * rho_hat / kin_u)
    lam = None
    gamma0 = None
    for shift in np.arange(0.0, 2.0, 0.05):
        lam_try = lam_nominal + shift
        if np.exp(2.0 * lam_try) * kin_u >= 0.95 * cap:
            break
        gamma0 = try_lambda(lam_try)
        if gamma0 is not None:
            lam = lam_try
            break
    if gamma0 is None:
        # squeeze deeper: a potential integral that dominates the kinetic
        # check shrinks faster than e^{2 lambda} under further squeezing
        for shift in np.arange(0.3, 16.0, 0.3):
            lam_try = lam_nominal - shift
            if lam_try <= -20.0:
                break
            gamma0 = try_lambda(lam_try)
            if gamma0 is not None:
                lam = lam_try
                break
    if gamma0 is None:
        raise NoConvergenceError(
            "no squeeze of the terminal state clears both rho/4 marks; "
            f"the grid radius {grid.r_max:.3g} may be too small to hold "
            "the spreading endpoint at this mass")

    K = segments
    nodes = [gamma0]
    for j in range(1, K):
        theta = lam * (1.0 - j / K)
        nodes.append(scale_mass(dilate(u, theta), m))
    nodes.append(scale_mass(u, m))
    return _checked_path(m, nodes, rho_hat, model)


def refine_barrier_witness(path: DiscretePath,
                           model: NonlinearityModel) -> DiscretePath:
    """Place one interior node onto the crossing shell kinetic = 4 rho.

    Walks the node sequence to the first segment straddling the shell
    (one exists: the start is below rho, the end above 4 rho) and replaces
    an interior node of that segment by its own dilation tuned onto the
    shell; a short fixed-point loop absorbs the resampling error of the
    dilation.  Endpoints and the admissibility cache are untouched.
    """
    target = 4.0 * path.rho_hat
    kin = [kinetic(node) for node in path.nodes]
    idx = None
    for j in range(len(kin) - 1):
        lo, hi = sorted((kin[j], kin[j + 1]))
        if lo <= target <= hi:
            idx = j if 0 < j else j + 1
            break
    if idx is None:
        # no straddling segment means some node already crossed exactly
        idx = int(np.argmin([abs(k - target) for k in kin[1:-1]])) + 1
    idx = min(idx, len(kin) - 2)

    node = path.nodes[idx]
    for _ in range(8):
        k_now = kinetic(node)
        if abs(k_now - target) <= 1e-9 * target:
            break
        node = scale_mass(dilate(node, 0.5 * np.log(target / k_now)), path.m)
    nodes = list(path.nodes)
    nodes[idx] = node
    refined = _checked_path(path.m, nodes, path.rho_hat, model)
    if refined.barrier_index() is None:
        raise AssertionError("barrier witness refinement failed to land "
                             "inside the crossing shell")
    return refined


def _descend_node(node: RealField, e_now: float, model: NonlinearityModel,
                  dt: float, ceiling: float) -> tuple[RealField, float]:
    """One monotone descent step: halve dt until the energy does not rise.

    The ceiling argument guards redistribution repair, where a node must
    get strictly below a prescribed level rather than merely not rise.
    """
    for _ in range(7):
        cand = flow_step(node, model, dt)
        e_cand = energy(cand, model).energy
        if e_cand <= min(e_now, ceiling):
            return cand, e_cand
        dt *= 0.5
    return node, e_now


def _redistribute(nodes: list[RealField], energies: list[float],
                  model: NonlinearityModel, m: float, step: float,
                  level: float) -> tuple[list[RealField], list[float]]:
    """Resample interior nodes at equal arclength in kinetic energy.

    Linear interpolation between neighboring fields can lift a fresh node
    above the current level when the segment cuts a ridge; such nodes are
    pushed back down by descent steps, or dropped in favor of the old
    node in their slot if descent cannot repair them.
    """
    kin = np.array([kinetic(node) for node in nodes])
    seg = np.abs(np.diff(kin))
    total = float(seg.sum())
    if total <= 0.0:
        return nodes, energies
    s = np.concatenate(([0.0], np.cumsum(seg)))
    targets = np.linspace(0.0, total, len(nodes))
    out = [nodes[0]]
    out_e = [energies[0]]
    cap = level + _LEVEL_SLACK * max(1.0, abs(level))
    for j in range(1, len(nodes) - 1):
        t = targets[j]
        i = int(np.searchsorted(s, t, side="right") - 1)
        i = min(max(i, 0), len(nodes) - 2)
        span = s[i + 1] - s[i]
        frac = (t - s[i]) / span if span > 0.0 else 0.0
        vals = (1.0 - frac) * nodes[i].values + frac * nodes[i + 1].values
        cand = scale_mass(RealField(nodes[0].grid, vals), m)
        e_cand = energy(cand, model).energy
        tries = 0
        while e_cand > cap and tries < 30:
            cand, e_cand = _descend_node(cand, e_cand, model, step, cap)
            tries += 1
            if tries >= 30 or e_cand <= cap:
                break
        if e_cand > cap:
            cand, e_cand = nodes[j], energies[j]
        out.append(cand)
        out_e.append(e_cand)
    out.append(nodes[-1])
    out_e.append(energies[-1])
    return out, out_e


def _polish(candidate: RealField, model: NonlinearityModel,
            m: float) -> SolveReport:
    """Bordered-Newton polish of the argmax node into a critical point.

    The damped stage is robust far from the root but its residual-norm
    backtracking can stall near a saddle; a full-step stage finishes the
    job from wherever the damped stage stopped.
    """
    w, mu, res, ok = newton_constrained(candidate, model, m)
    if not ok:
        w, mu, res, ok = newton_constrained(w, model, m, backtrack=False)
    fn = energy(w, model)
    scale = max(1.0, fn.kinetic)
    good = ((ok or res <= _POLISH_RESIDUAL * scale)
            and abs(fn.pohozaev) <= _POHOZAEV_BOUND * fn.kinetic
            and mu > 0.0)
    if good:
        classification = Classification.CONVERGED_CRITICAL
        message = ""
    else:
        classification = Classification.MAX_STEPS
        message = (f"polish fell short: residual {res:.3g}, "
                   f"|P| {abs(fn.pohozaev):.3g}, multiplier {mu:.3g}")
    trajectory = np.array([[0, fn.energy, fn.kinetic, fn.mass]])
    return SolveReport(final=w, trajectory=trajectory, multiplier=mu,
                       classification=classification, residual=res,
                       functionals=fn, steps=1, message=message)


def relax_path(path: DiscretePath, model: NonlinearityModel,
               iters: int = 400, step: float = 0.1) -> MountainPassReport:
    """Drop the interior of an admissible path until the maximum flattens.

    Each iteration moves every interior node by one mass-projected descent
    step of the constrained energy (halving the node's step when it would
    raise that node), so the path maximum is nonincreasing by
    construction.  Every few iterations the interior is resampled at
    equal kinetic arclength to keep resolution near the ridge.  The loop
    stops early when the maximum has stopped decreasing, and the argmax
    node is polished into a constrained critical point.
    """
    if iters < 1:
        raise ValueError("iters must be positive")
    if step <= 0.0:
        raise ValueError("step must be positive")
    nodes = list(path.nodes)
    energies = [energy(node, model).energy for node in nodes]
    trace = [max(energies)]

    for it in range(1, iters + 1):
        if it % _REDISTRIBUTE_EVERY == 0:
            nodes, energies = _redistribute(nodes, energies, model, path.m,
                                            step, trace[-1])
        new_nodes = [nodes[0]]
        new_energies = [energies[0]]
        for j in range(1, len(nodes) - 1):
            cand, e_cand = _descend_node(nodes[j], energies[j], model, step,
                                         np.inf)
            new_nodes.append(cand)
            new_energies.append(e_cand)
        new_nodes.append(nodes[-1])
        new_energies.append(energies[-1])
        nodes, energies = new_nodes, new_energies

        level = max(energies)
        if level > trace[-1] + _LEVEL_SLACK * max(1.0, abs(trace[-1])):
            raise AssertionError(
                f"path maximum rose from {trace[-1]:.12g} to {level:.12g}")
        trace.append(level)
        if len(trace) > _STALL_WINDOW:
            drop = trace[-1 - _STALL_WINDOW] - trace[-1]
            if drop < _STALL_DROP * max(1.0, abs(trace[-1])):
                break

    j_star = int(np.argmax(energies))
    candidate = nodes[j_star]
    polished = _polish(candidate, model, path.m)
    if polished.classification is Classification.CONVERGED_CRITICAL:
        level = polished.functionals.energy
    else:
        level = trace[-1]
    return MountainPassReport(
        mass=path.m, level=level, rho_hat=path.rho_hat, candidate=candidate,
        polished=polished, trace=np.asarray(trace))


def saddle_report(model: NonlinearityModel, m: float, grid: RadialGrid,
                  thresholds: MassThresholds | None = None,
                  curve=None, segments: int = 32, iters: int = 400,
                  step: float = 0.1,
                  config: FlowConfig | None = None) -> MountainPassReport:
    """Build, relax, polish, and cross-check a mountain-pass solution.

    The polished saddle is verified against an independent construction of
    the same state: the concentrated-branch shooting profile matched to
    the same mass must agree with the pass level to one percent.
    """
    if thresholds is None:
        thresholds = compute_thresholds(model, grid, config)
    path = build_admissible_path(model, m, grid, thresholds,
                                 segments=segments, config=config)
    report = relax_path(path, model, iters=iters, step=step)
    shot = match_mass(model, m, Branch.HIGH_OMEGA, grid, curve=curve)
    rel = abs(report.level - shot.energy) / max(abs(shot.energy), 1e-300)
    if rel > 1e-2:
        raise NoConvergenceError(
            f"pass level {report.level:.8g} disagrees with the equal-mass "
            f"shooting state I = {shot.energy:.8g} "
            f"(relative gap {rel:.3g} > 1e-2)")
    return replace(report, match_energy=shot.energy, match_rel_error=rel)
