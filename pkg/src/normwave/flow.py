"""Mass-constrained gradient flow and the mass thresholds.

The workhorse is the projected semi-implicit descent ("imaginary time"
method): each step solves (Id - dt lap) v = u + dt f(u) with a banded solve
and rescales v back to the mass sphere.  The step size adapts by rejection:
an energy increase halves dt, long streaks of accepted steps grow it, so
trajectories are energy-monotone by construction.  Once the energy
plateaus, a bordered Newton iteration on the pair (u, multiplier) drives
the constrained residual to machine level.

Outcomes are classified rather than forced: flows either converge to a
constrained critical point, spread out and vanish (the sub-threshold
regime, detected through a negative multiplier and a kinetic-energy floor),
drift out of the local well (when a well barrier is being enforced), or
exhaust the step budget.

On top of the flow sit the two mass thresholds: the global one (below it
every flow vanishes, above it the minimizer has negative energy), found by
bisection on the strict-negativity predicate, and the local-well one, found
by bisection on "the continuation-seeded local flow still converges inside
the well".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import solve_banded

from .model import NonlinearityModel, require
from .radial_field import (
    Functionals,
    NoConvergenceError,
    RadialGrid,
    RealField,
    energy,
    estimate_rho,
    kinetic,
    laplacian_diagonals,
    mass,
    multiplier,
    residual,
    save_field,
    scale_mass,
)

_MU_VANISH = 1e-3   # multipliers below this mark a spreading (vanishing) state


class Classification(Enum):
    CONVERGED_CRITICAL = "ConvergedCritical"
    VANISHED = "Vanished"
    DRIFTED_OUT_OF_LOCAL_WELL = "DriftedOutOfLocalWell"
    MAX_STEPS = "MaxSteps"


@dataclass
class FlowConfig:
    dt: float = 5e-3                 # initial step size; adapted during a solve
    max_steps: int = 20000
    tol: float = 1e-6                # energy-plateau and residual tolerance, in (0, 1e-3]
    rho_hat: float | None = None     # small-gradient threshold from estimate_rho
    spread_kinetic_floor: float | None = None   # vanishing declared below this; default rho_hat/10
    grid: RadialGrid | None = None   # used when no seed field fixes the grid
    dt_max: float = 50.0             # cap for the adaptive growth
    newton: bool = True              # polish plateaued flows with the bordered Newton

    def __post_init__(self):
        if not (self.dt > 0.0):
            raise ValueError("dt must be positive")
        if not (0.0 < self.tol <= 1e-3):
            raise ValueError("tol must lie in (0, 1e-3]")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    def floor(self) -> float:
        if self.spread_kinetic_floor is not None:
            return self.spread_kinetic_floor
        if self.rho_hat is not None:
            return self.rho_hat / 10.0
        return 0.0


@dataclass
class SolveReport:
    final: RealField
    trajectory: np.ndarray           # rows (step, energy, kinetic, mass)
    multiplier: float
    classification: Classification
    residual: float                  # weighted norm of -lap u + mu u - f(u)
    functionals: Functionals
    steps: int
    message: str = ""

    # residual and Pohozaev tolerances downstream are relative to this scale
    @property
    def scale(self) -> float:
        return max(1.0, self.functionals.kinetic)


def default_grid(dimension: int) -> RadialGrid:
    """Working grid for solitons of the desk-scale masses used in tests.

    The radius leaves room for the spread states the saddle search dilates
    into existence; resolution keeps the interface layers of flat-top
    profiles at several cells.
    """
    if dimension == 3:
        return RadialGrid(3, 768.0, 16384)
    return RadialGrid(dimension, 96.0, 3072)


def gaussian_seed(grid: RadialGrid, sigma: float, m: float) -> RealField:
    u = RealField(grid, np.exp(-grid.r**2 / (2.0 * sigma**2)))
    return scale_mass(u, m)


def _tridiag_solve(diag, upper, lower, b):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, b)


def flow_step(u: RealField, model: NonlinearityModel, dt: float) -> RealField:
    """One semi-implicit descent step projected back to the mass sphere."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    m0 = mass(u)
    if m0 <= 0.0:
        raise ValueError("flow requires a field with positive mass")
    g = u.grid
    diag, upper, lower = laplacian_diagonals(g)
    rhs = u.values + dt * model.f(u.values)
    v = _tridiag_solve(1.0 + dt * diag, dt * upper, dt * lower, rhs)
    return scale_mass(RealField(g, v), m0)


def newton_constrained(u: RealField, model: NonlinearityModel, m: float,
                       tol_res: float = 1e-11, max_iter: int = 60,
                       backtrack: bool = True
                       ) -> tuple[RealField, float, float, bool]:
    """Bordered Newton for the pair (field, multiplier) at fixed mass.

    Solves -lap u + mu u = f(u), sum(w u^2) = m.  Each iteration does two
    banded solves (for the correction and for the border column) and
    eliminates the multiplier update through the constraint row; steps are
    damped by backtracking on the residual norm.  Backtracking can stall
    near saddle-type roots, where the residual norm has spurious local
    minima; backtrack=False takes full steps instead (guarded against
    blowup, reporting the best iterate seen).  Returns
    (field, multiplier, residual, converged).
    """
    g = u.grid
    diagL, upper, lower = laplacian_diagonals(g)
    w = g.w
    v = u.values.copy()
    mu = multiplier(u, model)
    scale = max(1.0, kinetic(u))

    def residual_parts(vv, mm):
        lap = _apply_lap(g, diagL, upper, lower, vv)
        G1 = lap + mm * vv - model.f(vv)
        G2 = 0.5 * (float(np.dot(w, vv * vv)) - m)
        return G1, G2, float(np.sqrt(np.dot(w, G1**2)))

    G1, G2, res = residual_parts(v, mu)
    best = (v.copy(), mu, res, G2)
    for _ in range(max_iter):
        if res <= tol_res * scale and abs(G2) <= 1e-12 * max(1.0, m):
            return RealField(g, v), mu, res, True
        diagA = diagL + mu - model.f_prime(v)
        try:
            s = _tridiag_solve(diagA, upper, lower, G1)
            y = _tridiag_solve(diagA, upper, lower, v)
        except np.linalg.LinAlgError:
            break
        border = np.dot(w * v, y)
        if border == 0.0 or not np.all(np.isfinite(s)) or not np.all(np.isfinite(y)):
            break
        dmu = (G2 - np.dot(w * v, s)) / border
        dv = -s - dmu * y
        if backtrack:
            lam = 1.0
            improved = False
            while lam >= 2.0**-10:
                v_try = v + lam * dv
                mu_try = mu + lam * dmu
                G1t, G2t, rest = residual_parts(v_try, mu_try)
                if rest + abs(G2t) < res + abs(G2) or rest <= tol_res * scale:
                    v, mu, G1, G2, res = v_try, mu_try, G1t, G2t, rest
                    improved = True
                    break
                lam *= 0.5
            if not improved:
                break
        else:
            v_try = v + dv
            mu_try = mu + dmu
            if not (np.all(np.isfinite(v_try)) and np.isfinite(mu_try)):
                break
            G1t, G2t, rest = residual_parts(v_try, mu_try)
            if not np.isfinite(rest) or rest > 1e6 * max(res, best[2]):
                break
            v, mu, G1, G2, res = v_try, mu_try, G1t, G2t, rest
            if res + abs(G2) < best[2] + abs(best[3]):
                best = (v.copy(), mu, res, G2)
    if not backtrack and res + abs(G2) > best[2] + abs(best[3]):
        v, mu, res, G2 = best[0], best[1], best[2], best[3]
    converged = res <= tol_res * scale and abs(G2) <= 1e-12 * max(1.0, m)
    return RealField(g, v), mu, res, converged


def newton_free(u: RealField, model: NonlinearityModel, omega: float,
                tol_res: float = 1e-11, max_iter: int = 60
                ) -> tuple[RealField, float, bool]:
    """Damped Newton for -lap u + omega u = f(u) at fixed frequency."""
    g = u.grid
    diagL, upper, lower = laplacian_diagonals(g)
    w = g.w
    v = u.values.copy()
    scale = max(1.0, kinetic(u))

    def res_of(vv):
        lap = _apply_lap(g, diagL, upper, lower, vv)
        G = lap + omega * vv - model.f(vv)
        return G, float(np.sqrt(np.dot(w, G**2)))

    G, res = res_of(v)
    for _ in range(max_iter):
        if res <= tol_res * scale:
            return RealField(g, v), res, True
        diagA = diagL + omega - model.f_prime(v)
        try:
            s = _tridiag_solve(diagA, upper, lower, G)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(s)):
            break
        lam = 1.0
        improved = False
        while lam >= 2.0**-10:
            v_try = v - lam * s
            Gt, rest = res_of(v_try)
            if rest < res or rest <= tol_res * scale:
                v, G, res = v_try, Gt, rest
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    return RealField(g, v), res, res <= tol_res * scale


def _apply_lap(g, diag, upper, lower, v):
    """-lap acting on raw values through its tridiagonal bands."""
    out = diag * v
    out[:-1] += upper * v[1:]
    out[1:] += lower * v[:-1]
    return out


def _run_flow(seed: RealField, model: NonlinearityModel, m: float,
              config: FlowConfig, *, enforce_well: bool) -> SolveReport:
    """Adaptive projected descent with plateau detection and Newton finish."""
    u = scale_mass(seed, m) if abs(mass(seed) - m) > 1e-13 * m else seed
    dt = config.dt
    fun = energy(u, model)
    traj = [(0, fun.energy, fun.kinetic, fun.mass)]
    floor = config.floor()
    accept_streak = 0
    window: list[float] = [fun.energy]
    classification = Classification.MAX_STEPS
    message = ""
    step = 0

    while step < config.max_steps:
        step += 1
        v = flow_step(u, model, dt)
        fun_v = energy(v, model)
        if fun_v.energy <= fun.energy + 1e-13 * max(1.0, abs(fun.energy)):
            u, fun = v, fun_v
            traj.append((step, fun.energy, fun.kinetic, fun.mass))
            accept_streak += 1
            if accept_streak % 50 == 0:
                dt = min(dt * 1.2, config.dt_max)
            window.append(fun.energy)
            if len(window) > 50:
                window.pop(0)
        else:
            dt *= 0.5
            accept_streak = 0
            if dt < 1e-12:
                message = "step size collapsed"
                break
            continue

        if enforce_well and config.rho_hat is not None and fun.kinetic < config.rho_hat:
            classification = Classification.DRIFTED_OUT_OF_LOCAL_WELL
            message = "kinetic energy fell below the well threshold"
            break

        if floor > 0.0 and fun.kinetic < floor:
            classification = Classification.VANISHED
            message = "kinetic energy fell below the spreading floor"
            break

        # plateau test over the recorded window, per accepted step
        if len(window) == 50:
            drop = (window[0] - window[-1]) / (49.0 * max(1.0, abs(window[-1])))
            if drop < config.tol:
                mu = multiplier(u, model)
                if config.newton:
                    u_new, mu_new, res, ok = newton_constrained(u, model, m)
                    if ok:
                        fun_new = energy(u_new, model)
                        if fun_new.energy <= fun.energy + 1e-12 * max(1.0, abs(fun.energy)):
                            traj.append((step, fun_new.energy, fun_new.kinetic, fun_new.mass))
                        u, fun, mu = u_new, fun_new, mu_new
                        classification = Classification.CONVERGED_CRITICAL
                        break
                res_now = residual(u, mu, model)
                if res_now <= config.tol * max(1.0, fun.kinetic):
                    classification = Classification.CONVERGED_CRITICAL
                    break
                # not settled yet: keep flowing with a fresh window
                window = [fun.energy]

    mu = multiplier(u, model)
    res = residual(u, mu, model)
    if classification is Classification.CONVERGED_CRITICAL and mu <= _MU_VANISH:
        # critical point reached, but it is the spreading (box-eigenstate)
        # branch: multipliers of true minimizers in the window are positive
        classification = Classification.VANISHED
        message = "converged to the spreading branch (nonpositive multiplier)"
    if enforce_well and classification is Classification.VANISHED:
        classification = Classification.DRIFTED_OUT_OF_LOCAL_WELL
    return SolveReport(
        final=u,
        trajectory=np.asarray(traj),
        multiplier=mu,
        classification=classification,
        residual=res,
        functionals=fun,
        steps=step,
        message=message,
    )


def solve_global(model: NonlinearityModel, m: float, config: FlowConfig,
                 seed_field: RealField | None = None) -> SolveReport:
    """Flow toward the global constrained minimizer, or detect vanishing.

    With no explicit seed a deterministic two-stage multistart runs: first a
    concentrated amplitude-limited Gaussian (the only seed that can fall
    into the solitonic well), accepted when it converges to strictly
    negative energy; otherwise a spread Gaussian probe decides between
    vanishing and the well.  A single fixed seed cannot serve both sides of
    the threshold: concentrated seeds below it get captured by the
    positive-energy local well, spread seeds above it settle on the
    box-size spreading branch.
    """
    require(model, "global")
    if m <= 0.0:
        raise ValueError("mass must be positive")
    if seed_field is not None:
        return _run_flow(seed_field, model, m, config, enforce_well=False)
    grid = config.grid if config.grid is not None else default_grid(model.dimension)
    N = grid.dimension
    # width that caps the seed amplitude near the flat-top scale
    sigma_c = max(2.5, (m / (1.21 * np.pi ** (N / 2.0))) ** (1.0 / N))
    rep = _run_flow(gaussian_seed(grid, sigma_c, m), model, m, config, enforce_well=False)
    if (rep.classification is Classification.CONVERGED_CRITICAL
            and rep.functionals.energy < -10.0 * config.tol):
        return rep
    spread = _run_flow(gaussian_seed(grid, grid.r_max / 8.0, m), model, m, config,
                       enforce_well=False)
    if (spread.classification is Classification.CONVERGED_CRITICAL
            and spread.functionals.energy < -10.0 * config.tol):
        return spread
    return spread


def lambda_hat(rho_hat: float, dimension: int) -> float:
    """Energy barrier of the local well: min(1/4, 1/N) times the threshold."""
    return min(0.25, 1.0 / dimension) * rho_hat


def solve_local(model: NonlinearityModel, m: float, config: FlowConfig,
                seed_field: RealField) -> SolveReport:
    """Flow inside the local well above the small-gradient threshold.

    The seed must already sit inside the well: kinetic above four times the
    threshold and energy below the barrier.  The flow is classified as
    drifted out of the well as soon as its kinetic energy crosses the
    threshold from above.
    """
    require(model, "local")
    if config.rho_hat is None:
        raise ValueError("solve_local needs rho_hat in the config")
    if m <= 0.0:
        raise ValueError("mass must be positive")
    seed = scale_mass(seed_field, m)
    k0 = kinetic(seed)
    I0 = energy(seed, model).energy
    barrier = lambda_hat(config.rho_hat, model.dimension)
    if k0 <= 4.0 * config.rho_hat:
        raise ValueError(
            f"seed kinetic {k0:.3g} must exceed 4*rho_hat = {4*config.rho_hat:.3g}")
    if I0 >= barrier:
        raise ValueError(
            f"seed energy {I0:.3g} must lie below the well barrier {barrier:.3g}")
    rep = _run_flow(seed, model, m, config, enforce_well=True)
    if rep.classification is Classification.CONVERGED_CRITICAL:
        if rep.multiplier <= 0.0:
            raise NoConvergenceError(
                "local flow converged with a nonpositive multiplier")
        vals = rep.final.values
        if float(vals.min() * vals.max()) < -1e-8 * float(np.max(np.abs(vals))**2):
            raise NoConvergenceError("local minimizer changed sign")
    return rep


def estimate_mstar(model: NonlinearityModel, config: FlowConfig,
                   bracket: tuple[float, float]) -> float:
    """Bisect the mass threshold below which every global flow vanishes.

    predicate(m) = "the global solve converges with energy < -10 tol".
    The probed samples are checked for monotonicity (the minimum energy is
    nonincreasing in the mass, so the predicate flips exactly once).
    """
    require(model, "local")
    lo, hi = bracket
    if not (0.0 < lo < hi):
        raise ValueError("need 0 < m_lo < m_hi")

    probed: dict[float, bool] = {}

    def predicate(m: float) -> bool:
        rep = solve_global(model, m, config)
        ok = (rep.classification is Classification.CONVERGED_CRITICAL
              and rep.functionals.energy < -10.0 * config.tol)
        probed[m] = ok
        return ok

    if predicate(lo) or not predicate(hi):
        raise ValueError(
            f"bracket ({lo}, {hi}) does not straddle the threshold")
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    masses = sorted(probed)
    flags = [probed[mm] for mm in masses]
    if flags != sorted(flags):
        raise NoConvergenceError(
            "global predicate not monotone across probed masses")
    return 0.5 * (lo + hi)


def estimate_mstarstar(model: NonlinearityModel, config: FlowConfig,
                       mstar: float, reference: RealField | None = None
                       ) -> float:
    """Bisect the lower end of the local-well mass range.

    Seeds at each probed mass by rescaling the minimizer at the global
    threshold (continuation), and asks whether the local flow still
    converges inside the well with energy below the barrier.
    """
    require(model, "local")
    if config.rho_hat is None:
        raise ValueError("estimate_mstarstar needs rho_hat in the config")
    if reference is None:
        rep = solve_global(model, 1.001 * mstar, config)
        if rep.classification is not Classification.CONVERGED_CRITICAL:
            raise NoConvergenceError(
                "could not compute the reference minimizer just above the threshold")
        reference = rep.final
    barrier = lambda_hat(config.rho_hat, model.dimension)

    def predicate(m: float) -> bool:
        seed = scale_mass(reference, m)
        if kinetic(seed) <= 4.0 * config.rho_hat:
            return False
        if energy(seed, model).energy >= barrier:
            return False
        try:
            rep = solve_local(model, m, config, seed)
        except NoConvergenceError:
            return False
        return (rep.classification is Classification.CONVERGED_CRITICAL
                and rep.functionals.energy < barrier)

    hi = 0.995 * mstar
    if not predicate(hi):
        raise NoConvergenceError(
            "no admissible local seed just below the global threshold")
    lo = hi / 2.0
    tries = 0
    while predicate(lo):
        hi = lo
        lo *= 0.5
        tries += 1
        if tries > 6:
            import warnings

            warnings.warn(
                "local well persists down to the smallest probed mass; "
                "returning the saturated bracket edge")
            return lo
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class MassThresholds:
    """The two mass thresholds, the well threshold, and the continuation seed."""
    mstar: float            # below it the global infimum is 0 and unattained
    mstarstar: float        # below it the continuation-seeded local well closes
    rho_hat: float          # small-gradient threshold certified at mass mstar
    reference: RealField    # global minimizer just above mstar (continuation seed)


def compute_thresholds(model: NonlinearityModel, grid: RadialGrid,
                       config: FlowConfig | None = None,
                       bracket: tuple[float, float] = (20.0, 500.0),
                       seed: int = 20260825) -> MassThresholds:
    """Compute mstar, mstarstar and rho_hat on one grid in a consistent order.

    A provisional rho at the top of the bracket (rho is nonincreasing in the
    mass, so this is the conservative choice) equips the flow with a
    vanishing floor for the mstar bisection; rho is then re-certified at the
    found threshold, the reference minimizer is taken just above it, and the
    local-well bisection runs seeded by that reference.  The seed fixes the
    probe family behind both rho certifications.
    """
    base = config or FlowConfig()
    rho_pre = estimate_rho(model, bracket[1], grid, seed=seed)
    cfg = FlowConfig(dt=base.dt, max_steps=base.max_steps, tol=base.tol,
                     rho_hat=rho_pre, grid=grid, dt_max=base.dt_max,
                     newton=base.newton)
    mstar = estimate_mstar(model, cfg, bracket)
    rho_hat = estimate_rho(model, mstar, grid, seed=seed)
    cfg_local = FlowConfig(dt=base.dt, max_steps=base.max_steps, tol=base.tol,
                           rho_hat=rho_hat, grid=grid, dt_max=base.dt_max,
                           newton=base.newton)
    rep = solve_global(model, 1.001 * mstar, cfg_local)
    if rep.classification is not Classification.CONVERGED_CRITICAL:
        raise NoConvergenceError(
            "no reference minimizer just above the global threshold")
    mstarstar = estimate_mstarstar(model, cfg_local, mstar, rep.final)
    return MassThresholds(mstar=mstar, mstarstar=mstarstar,
                          rho_hat=rho_hat, reference=rep.final)


def report_to_json(report: SolveReport, path=None, field_csv=None) -> dict:
    """Serialize a report; the field goes inline unless a CSV path is given."""
    doc = {
        "classification": report.classification.value,
        "multiplier": report.multiplier,
        "residual": report.residual,
        "steps": report.steps,
        "message": report.message,
        "functionals": {
            "mass": report.functionals.mass,
            "kinetic": report.functionals.kinetic,
            "potential": report.functionals.potential,
            "energy": report.functionals.energy,
            "pohozaev": report.functionals.pohozaev,
        },
        "trajectory": report.trajectory.tolist(),
    }
    if field_csv is not None:
        save_field(field_csv, report.final)
        doc["field_csv"] = str(field_csv)
    else:
        doc["field"] = report.final.values.tolist()
    if path is not None:
        with open(path, "w") as fh:
            json.dump(doc, fh)
    return doc
