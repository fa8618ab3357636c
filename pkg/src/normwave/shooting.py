"""Radial shooting solver for standing-wave profiles.

Solves the free radial problem

    -u'' - ((N-1)/r) u' + omega u = f(u),   u'(0) = 0,  u(r) -> 0,

by bisection on the initial amplitude u(0) of the associated initial value
problem.  A trajectory either decays to zero (a bound profile), diverges in
amplitude, or stays trapped oscillating around a nonzero rest value; the
boundary between "decays or undershoots" and "crosses zero or diverges"
isolates the positive ground-state profile, and higher crossing counts give
nodal excited states.

The integrator is a vectorized adaptive Dormand-Prince 5(4) scheme with a
shared step over a batch of candidate amplitudes, which makes the amplitude
scans and the bracket refinement cheap.  Accepted profiles are grafted with
the analytic linear far-field tail, polished by a free Newton iteration on
the caller's grid, and certified on an internal fine grid where the scale
invariance defect and the equation residual are measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.special import kve

from .model import NonlinearityModel
from .radial_field import NoConvergenceError, RadialGrid, RealField, energy, zeros
from .flow import newton_free

# classification codes used by the batch integrator
_RUNNING = 0   # still undecided at the stop radius (trapped / oscillating)
_DIVERGED = 1  # amplitude exceeded the energy cap
_DECAYED = 2   # small amplitude with matching far-field logarithmic slope

_U0_PROBES = 400          # log-spaced amplitude probes for the initial scan
_U0_MAX_DEFAULT = 10.0    # top of the amplitude scan window
_BISECT_REL_WIDTH = 1e-12   # required relative width of the final bracket
_CERT_POINTS = 131072       # internal certification grid resolution
_POHOZAEV_BOUND = 1e-6      # |P| <= bound * kinetic at accepted solutions
_RESIDUAL_BOUND = 1e-6      # free-equation residual bound at accepted solutions


class ExitKind(Enum):
    """How a single shot left the integration window."""

    DECAYED = "Decayed"
    DIVERGED = "Diverged"
    OSCILLATING = "Oscillating"


class Branch(Enum):
    """Selects one monotone side of the mass curve for mass matching.

    LOW_OMEGA selects the energy-minimizing family: mass increases with
    frequency, and for the cubic-quintic model these representatives sit at
    frequencies above the interior mass minimum.  HIGH_OMEGA selects the
    mountain-pass family: mass decreases with frequency, representatives sit
    below the mass minimum.  The names index the two families, not the
    numeric ordering of their frequencies on the curve.
    """

    LOW_OMEGA = "LowOmega"
    HIGH_OMEGA = "HighOmega"


class NoBracketError(RuntimeError):
    """No amplitude bracket with the requested crossing count was found."""


class StepUnderflowError(RuntimeError):
    """The adaptive step collapsed below the representable floor."""


@dataclass(frozen=True)
class ShootResult:
    profile: RealField        # polished profile on the caller's grid
    u0: float                 # bisected initial amplitude u(0)
    omega: float              # frequency of the free equation
    node_count: int           # sign changes of the profile
    mass: float               # squared weighted L2 norm, certified value
    energy: float             # constrained energy I, certified value
    action: float             # I + (omega/2) * mass
    pohozaev_residual: float  # |P| on the certification grid
    residual: float           # free-equation residual on the certification grid


@dataclass(frozen=True)
class CurvePoint:
    omega: float
    mass: float
    energy: float
    action: float
    u0: float


# ---------------------------------------------------------------------------
# batch integrator

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def _largest_positive_f_root(model: NonlinearityModel) -> float:
    """Largest t with F(t) = 0, or infinity when F stays positive.

    Any trajectory that is not running away to infinity keeps its amplitude
    below max(u(0), this root): the mechanical energy F(u) - omega u^2 / 2
    only decreases along the radial variable, so amplitudes beyond every
    F-zero are unreachable from rest unless the shot is divergent.
    """
    t = 1.0
    # walk up until F goes negative; if it never does the cap is infinite
    for _ in range(80):
        if model.F(t) < 0.0:
            break
        t *= 2.0
    else:
        return math.inf
    lo, hi = t / 2.0, t
    while model.F(lo) <= 0.0:
        lo /= 2.0
        if lo < 1e-12:
            return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if model.F(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def _class_horizon(grid: RadialGrid, omega: float) -> float:
    """Radius by which every bracket-relevant shot has been classified.

    Crossing and divergence events for near-critical amplitudes happen
    within the profile core plus a few dozen decay lengths; integrating
    trapped oscillators beyond that just burns time on large grids.
    """
    return min(grid.r_max, 60.0 / math.sqrt(omega))


def _integrate_batch(model, omega: float, u0s: np.ndarray, grid: RadialGrid,
                     record: bool = False, r_stop: Optional[float] = None):
    """Integrate the radial IVP for a batch of amplitudes with a shared step.

    Returns (status, nodes, r_dec, trace) where status holds the per-shot
    classification code, nodes the number of sign changes, r_dec the radius
    where the decay acceptance fired (nan if it did not), and trace the
    recorded (r, u) samples when record is requested (batch of one only).
    """
    dim = grid.dimension
    kappa = math.sqrt(omega)
    if r_stop is None:
        r_stop = grid.r_max
    u0s = np.asarray(u0s, dtype=float)
    m = u0s.size
    cap_root = _largest_positive_f_root(model)
    cap = (1.0 + 1e-6) * np.maximum(u0s, cap_root if math.isfinite(cap_root) else u0s)
    if not math.isfinite(cap_root):
        cap = np.full(m, math.inf)

    # series start just off the origin: u'' (0) = (omega u0 - f(u0)) / N
    r = 1e-6
    curv = (omega * u0s - model.f(u0s)) / dim
    u = u0s + 0.5 * curv * r * r
    v = curv * r

    status = np.zeros(m, dtype=int)
    nodes = np.zeros(m, dtype=int)
    r_dec = np.full(m, math.nan)
    alive = np.ones(m, dtype=bool)
    prev_sign = np.sign(u)

    trace_r = [r] if record else None
    trace_u = [float(u[0])] if record else None

    geom = 0.5 * (dim - 1)

    def rhs(rr, uu, vv):
        return vv, omega * uu - model.f(uu) - ((dim - 1) / rr) * vv

    h = min(1e-3, 0.02 / kappa)
    h_floor = 1e-13
    rtol = 1e-10
    atol = 1e-13 * max(1.0, float(u0s.max()))
    safety, grow_cap, shrink_cap = 0.9, 5.0, 0.2

    while alive.any() and r < r_stop:
        h = min(h, r_stop - r)
        with np.errstate(invalid="ignore", over="ignore"):
            ku = np.empty((7, m))
            kv_ = np.empty((7, m))
            for s in range(7):
                uu = u.copy()
                vv = v.copy()
                for j, a in enumerate(_DP_A[s]):
                    uu += h * a * ku[j]
                    vv += h * a * kv_[j]
                ku[s], kv_[s] = rhs(r + _DP_C[s] * h, uu, vv)
            u5 = u + h * (_DP_B5 @ ku)
            v5 = v + h * (_DP_B5 @ kv_)
            u4 = u + h * (_DP_B4 @ ku)
            v4 = v + h * (_DP_B4 @ kv_)
            scale_u = atol + rtol * np.maximum(np.abs(u), np.abs(u5))
            scale_v = atol + rtol * np.maximum(np.abs(v), np.abs(v5))
            err_vec = np.maximum(np.abs(u5 - u4) / scale_u, np.abs(v5 - v4) / scale_v)
        err_vec = np.where(alive, err_vec, 0.0)
        err_vec = np.nan_to_num(err_vec, nan=np.inf, posinf=np.inf)
        err = float(err_vec.max()) if m else 0.0

        if err <= 1.0:
            r += h
            u = np.where(alive, u5, u)
            v = np.where(alive, v5, v)
            if record:
                trace_r.append(r)
                trace_u.append(float(u[0]))
            sgn = np.sign(u)
            flip = alive & (sgn != 0) & (prev_sign != 0) & (sgn != prev_sign)
            nodes[flip] += 1
            prev_sign = np.where(sgn != 0, sgn, prev_sign)

            with np.errstate(invalid="ignore"):
                div = alive & ((np.abs(u) > cap) | ~np.isfinite(u) | ~np.isfinite(v))
            status[div] = _DIVERGED
            alive &= ~div
            # park frozen shots at zero so later stage evaluations of the
            # nonlinearity stay finite
            u = np.where(alive | (status == _DECAYED), u, 0.0)
            v = np.where(alive | (status == _DECAYED), v, 0.0)

            small = np.abs(u) <= 1e-4 * u0s
            slope = np.abs(v + (kappa + geom / r) * u) <= 0.01 * kappa * np.abs(u)
            dec = alive & small & slope & (np.abs(u) > 0)
            status[dec] = _DECAYED
            r_dec[dec] = r
            alive &= ~dec

            h = min(h * min(grow_cap, safety * err ** -0.2 if err > 0 else grow_cap),
                    1.0 / kappa)
        else:
            h *= max(shrink_cap, safety * err ** -0.25)
            if h < h_floor:
                raise StepUnderflowError(
                    f"step underflow at r={r:.3g} for omega={omega:.6g}")

    trace = None
    if record:
        trace = (np.array(trace_r), np.array(trace_u))
    return status, nodes, r_dec, trace


def shoot_once(model: NonlinearityModel, omega: float, u0: float,
               grid: RadialGrid):
    """Single shot of the radial IVP; returns (profile, node_count, exit_kind).

    The profile is the integrated trajectory sampled on the grid.  Decayed
    shots are extended past the matching radius with the analytic linear
    tail; diverged shots are zeroed past the blow-up radius.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if u0 < 0:
        raise ValueError("u0 must be nonnegative")
    if u0 == 0.0:
        return zeros(grid), 0, ExitKind.DECAYED
    status, nodes, r_dec, trace = _integrate_batch(
        model, omega, np.array([u0]), grid, record=True,
        r_stop=_class_horizon(grid, omega))
    rs, us = trace
    code = int(status[0])
    if code == _DECAYED:
        values = _graft_tail(grid, omega, rs, us, float(r_dec[0]))
        kind = ExitKind.DECAYED
    elif code == _DIVERGED:
        values = np.interp(grid.r, rs, us, right=0.0)
        kind = ExitKind.DIVERGED
    else:
        values = np.interp(grid.r, rs, us)
        kind = ExitKind.OSCILLATING
    return RealField(grid, values), int(nodes[0]), kind


def _tail_ratio(dim: int, kappa: float, r: np.ndarray, r0: float) -> np.ndarray:
    """Decay-tail values relative to the tail value at r0.

    The linear far field is r^{1 - N/2} K_{N/2-1}(kappa r); the exponentially
    scaled Bessel function keeps the ratio finite far out.
    """
    nu = 0.5 * dim - 1.0
    rr = np.asarray(r, dtype=float)
    shape = (rr / r0) ** (1.0 - 0.5 * dim) * (
        kve(nu, kappa * rr) / kve(nu, kappa * r0)) * np.exp(-kappa * (rr - r0))
    return shape


def _graft_tail(grid: RadialGrid, omega: float, rs, us, r_match: float):
    """Trajectory resampled on the grid with the analytic tail past r_match."""
    kappa = math.sqrt(omega)
    i = int(np.searchsorted(rs, r_match, side="right")) - 1
    i = max(1, min(i, len(rs) - 1))
    values = np.interp(grid.r, rs[: i + 1], us[: i + 1])
    r0, u0v = float(rs[i]), float(us[i])
    tail = grid.r > r0
    if tail.any():
        values[tail] = u0v * _tail_ratio(grid.dimension, kappa, grid.r[tail], r0)
    return values


def _truncate_at_departure(rs: np.ndarray, us: np.ndarray) -> int:
    """Index of the smallest |u| past the last sign change.

    Near-critical shots follow the bound profile, reach a minimum amplitude,
    and only then depart along the growing far-field mode; cutting at the
    minimum keeps the meaningful part of the trajectory.
    """
    sgn = np.sign(us)
    flips = np.nonzero((sgn[1:] != sgn[:-1]) & (sgn[1:] != 0) & (sgn[:-1] != 0))[0]
    start = int(flips[-1]) + 1 if flips.size else int(np.argmax(np.abs(us) < 0.5 * np.abs(us[0])))
    if start >= len(us) - 1:
        start = len(us) // 2
    return start + int(np.argmin(np.abs(us[start:])))


def _polish(model, omega: float, grid: RadialGrid, seed_values: np.ndarray):
    field, res, ok = newton_free(RealField(grid, seed_values), model, omega)
    return field, res, ok


def _count_nodes(values: np.ndarray) -> int:
    amp = float(np.max(np.abs(values)))
    if amp == 0.0:
        return 0
    kept = values[np.abs(values) > 1e-9 * amp]
    if kept.size == 0:
        return 0
    sgn = np.sign(kept)
    return int(np.count_nonzero(sgn[1:] != sgn[:-1]))


def certification_grid(grid: RadialGrid, omega: float) -> RadialGrid:
    """Fine internal grid used for defect certificates.

    The radius covers the caller's window plus the full analytic tail; the
    resolution keeps the quadratic quadrature defect of the scale-invariance
    functional below the certificate bound with margin.
    """
    kappa = math.sqrt(omega)
    r_max = max(grid.r_max, 30.0 / kappa + 50.0)
    return RadialGrid(grid.dimension, r_max, _CERT_POINTS)


def _certify(field: RealField, model, omega: float):
    """Re-solve on the certification grid; returns (functionals, residual)."""
    cgrid = certification_grid(field.grid, omega)
    kappa = math.sqrt(omega)
    vals = np.interp(cgrid.r, field.grid.r, field.values)
    beyond = cgrid.r > field.grid.r[-1]
    if beyond.any():
        edge = float(field.values[-1])
        if abs(edge) > 0:
            vals[beyond] = edge * _tail_ratio(cgrid.dimension, kappa,
                                              cgrid.r[beyond], float(field.grid.r[-1]))
        else:
            vals[beyond] = 0.0
    cert, res, ok = _polish(model, omega, cgrid, vals)
    # the weighted residual norm has a rounding floor near 1e-9 on the fine
    # grid; a stalled iteration an order below the certificate bound is fine
    if not ok and res > 0.1 * _RESIDUAL_BOUND:
        raise NoConvergenceError(
            f"certification solve failed at omega={omega:.6g} (residual {res:.3g})")
    fn = energy(cert, model, omega=omega)
    return fn, res


def _build_result(model, omega: float, grid: RadialGrid, u0: float,
                  polished: RealField, expect_nodes: int) -> ShootResult:
    fn, res = _certify(polished, model, omega)
    if abs(fn.pohozaev) > _POHOZAEV_BOUND * fn.kinetic:
        raise NoConvergenceError(
            f"scale-invariance certificate failed at omega={omega:.6g}: "
            f"|P|={abs(fn.pohozaev):.3g} vs kinetic={fn.kinetic:.3g}")
    if res > _RESIDUAL_BOUND:
        raise NoConvergenceError(
            f"residual certificate failed at omega={omega:.6g}: {res:.3g}")
    tail_amp = abs(float(polished.values[-1]))
    if tail_amp > 1e-8 * u0:
        raise ValueError(
            f"grid radius {grid.r_max:.3g} too small for omega={omega:.6g}: "
            f"|u(r_max)| = {tail_amp:.3g} exceeds 1e-8 * u0")
    return ShootResult(
        profile=polished, u0=u0, omega=omega, node_count=expect_nodes,
        mass=fn.mass, energy=fn.energy, action=fn.action,
        pohozaev_residual=abs(fn.pohozaev), residual=res)


# ---------------------------------------------------------------------------
# bracket location and refinement

def _too_big(status, nodes, k: int):
    return (nodes >= k + 1) | (status == _DIVERGED)


def _first_transition(u0s, big, nodes=None, k: Optional[int] = None):
    """First adjacent pair where the predicate flips from small to big."""
    for i in range(len(u0s) - 1):
        if not big[i] and big[i + 1]:
            if k is None or nodes is None or nodes[i] == k:
                return float(u0s[i]), float(u0s[i + 1])
    return None


def _refine_bracket(model, omega, grid, lo, hi, k: int):
    """Shrink [lo, hi] around the crossing-count transition by batched scans."""
    width_target = _BISECT_REL_WIDTH * hi
    for _ in range(24):
        if hi - lo <= width_target:
            break
        probes = np.linspace(lo, hi, 64)
        status, nodes, _, _ = _integrate_batch(
            model, omega, probes, grid, r_stop=_class_horizon(grid, omega))
        big = _too_big(status, nodes, k)
        pair = _first_transition(probes, big)
        if pair is None:
            # classification flipped inside the old bracket; fall back to
            # plain bisection on the midpoint
            mid = 0.5 * (lo + hi)
            st, nd, _, _ = _integrate_batch(model, omega, np.array([mid]), grid,
                                            r_stop=_class_horizon(grid, omega))
            if _too_big(st, nd, k)[0]:
                hi = mid
            else:
                lo = mid
            continue
        lo, hi = pair
    return lo, hi


def _scan_brackets(model, omega: float, grid: RadialGrid, k: int = 0,
                   u0_max: float = _U0_MAX_DEFAULT):
    """All amplitude brackets of the k-crossing transition in the scan window."""
    probes = np.geomspace(1e-4 * u0_max, u0_max, _U0_PROBES)
    status, nodes, _, _ = _integrate_batch(model, omega, probes, grid,
                                           r_stop=_class_horizon(grid, omega))
    big = _too_big(status, nodes, k)
    out = []
    for i in range(len(probes) - 1):
        if not big[i] and big[i + 1] and nodes[i] == k:
            out.append((float(probes[i]), float(probes[i + 1])))
    return out


def _acceptable_positive(field: RealField, u0: float) -> bool:
    vals = field.values
    amp = float(np.abs(vals).max())
    if amp < 1e-6 * u0:
        return False    # collapsed to the trivial solution
    return _count_nodes(vals) == 0 and float(vals.min()) >= -1e-9 * amp


def _droplet_fallback(model, omega: float, grid: RadialGrid, u0: float,
                      rs, us):
    """Plateau-profile retry ladder for frequencies near the existence edge.

    Close to the top of the frequency window the bound profile is a large
    droplet whose front radius is exponentially sensitive to the initial
    amplitude, so the bisected trajectory departs before its front reaches
    the true position.  Newton still converges when seeded with a sharp
    front at roughly the right radius, so march the front outward until a
    positive decaying profile is accepted.
    """
    below = np.nonzero(np.abs(us) < 0.9 * u0)[0]
    if below.size:
        r_front = float(rs[below[0]])
    else:
        # the shot never descended: it hugged the plateau equilibrium and
        # departed upward, which happens when the true front lies beyond the
        # radius reachable by amplitude bisection in double precision.  A
        # front profile still exists whenever the plateau carries positive
        # excess F(u0) - (omega/2) u0^2, and the departure radius bounds the
        # front position from below.  Without the excess the bracket is the
        # trapped versus runaway separatrix and there is nothing to rescue.
        if model.F(u0) - 0.5 * omega * u0 * u0 <= 0.0:
            return None
        r_front = float(rs[-1])

    def attempt(R):
        seed = u0 * 0.5 * (1.0 - np.tanh((grid.r - R) / 2.0))
        cand, res, ok = _polish(model, omega, grid, seed)
        return cand if ok and _acceptable_positive(cand, u0) else None, res

    # coarse pass over front radii, then a fine pass around the most
    # promising one: the Newton basin for the front position is narrow
    best_R, best_res = None, math.inf
    for R in np.arange(max(r_front - 4.0, 2.0), 0.95 * grid.r_max, 4.0):
        cand, res = attempt(R)
        if cand is not None:
            return cand
        if res < best_res:
            best_R, best_res = R, res
    if best_R is not None:
        for R in np.arange(best_R - 3.5, best_R + 3.51, 0.5):
            if R <= 0:
                continue
            cand, res = attempt(R)
            if cand is not None:
                return cand
    return None


def find_ground_state(model: NonlinearityModel, omega: float,
                      grid: RadialGrid,
                      _hint: Optional[tuple] = None) -> ShootResult:
    """Positive zero-crossing bound profile at the given frequency.

    Bisection isolates the decayed zero-crossing amplitude branch to a
    relative width of 1e-12, the trajectory is grafted with the analytic
    tail, Newton-polished on the caller's grid, and certified on the
    internal fine grid.  Raises NoBracketError when the amplitude scan shows
    no transition, which signals nonexistence at this frequency.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    pair = None
    if _hint is not None:
        lo_h, hi_h = _hint
        probes = np.geomspace(max(lo_h * 0.8, 1e-10), hi_h * 1.2, 33)
        status, nodes, _, _ = _integrate_batch(
            model, omega, probes, grid, r_stop=_class_horizon(grid, omega))
        pair = _first_transition(probes, _too_big(status, nodes, 0), nodes, 0)
    if pair is None:
        brackets = _scan_brackets(model, omega, grid, k=0)
        if not brackets:
            raise NoBracketError(
                f"no zero-crossing amplitude bracket for omega={omega:.6g}")
        pair = brackets[0]
    lo, hi = _refine_bracket(model, omega, grid, pair[0], pair[1], k=0)
    u0 = 0.5 * (lo + hi)

    status, nodes, r_dec, trace = _integrate_batch(
        model, omega, np.array([u0]), grid, record=True,
        r_stop=_class_horizon(grid, omega))
    rs, us = trace
    polished = None
    if status[0] == _DECAYED:
        seed = _graft_tail(grid, omega, rs, us, float(r_dec[0]))
    else:
        # near-critical shot departed before the decay test fired; cut at the
        # turning point and graft the tail there
        i = _truncate_at_departure(rs, us)
        seed = None
        if abs(us[i]) <= 0.5 * u0:
            seed = _graft_tail(grid, omega, rs[: i + 1], us[: i + 1], float(rs[i]))
    if seed is not None:
        cand, _, ok = _polish(model, omega, grid, np.clip(seed, 0.0, None))
        if ok and _acceptable_positive(cand, u0):
            polished = cand
    if polished is None:
        polished = _droplet_fallback(model, omega, grid, u0, rs, us)
    if polished is None:
        raise NoBracketError(
            f"no decaying positive profile found at omega={omega:.6g}")
    return _build_result(model, omega, grid, u0, polished, expect_nodes=0)


def find_nodal_state(model: NonlinearityModel, omega: float, k_nodes: int,
                     grid: RadialGrid) -> ShootResult:
    """Decaying profile with exactly k_nodes sign changes.

    The nodal amplitude windows sit between the ground-state amplitude and
    the amplitude cap, so the scan runs linearly over that slice.  All
    ShootResult certificates hold; the profile is sign-changing.
    """
    if k_nodes == 0:
        return find_ground_state(model, omega, grid)
    if k_nodes < 0:
        raise ValueError("k_nodes must be nonnegative")
    ground = _scan_brackets(model, omega, grid, k=0)
    if not ground:
        raise NoBracketError(f"no ground bracket at omega={omega:.6g}")
    start = ground[0][1]
    cap_root = _largest_positive_f_root(model)
    top = min(_U0_MAX_DEFAULT, cap_root * (1 - 1e-9)) if math.isfinite(cap_root) \
        else _U0_MAX_DEFAULT
    if top <= start:
        top = _U0_MAX_DEFAULT
    probes = np.linspace(start, top, _U0_PROBES)
    status, nodes, _, _ = _integrate_batch(
        model, omega, probes, grid, r_stop=_class_horizon(grid, omega))
    pair = _first_transition(probes, _too_big(status, nodes, k_nodes), nodes, k_nodes)
    if pair is None:
        raise NoBracketError(
            f"no {k_nodes}-crossing bracket at omega={omega:.6g}")
    lo, hi = _refine_bracket(model, omega, grid, pair[0], pair[1], k=k_nodes)
    u0 = 0.5 * (lo + hi)

    status, nodes, r_dec, trace = _integrate_batch(
        model, omega, np.array([u0]), grid, record=True,
        r_stop=_class_horizon(grid, omega))
    rs, us = trace
    if status[0] == _DECAYED:
        seed = _graft_tail(grid, omega, rs, us, float(r_dec[0]))
    else:
        i = _truncate_at_departure(rs, us)
        seed = _graft_tail(grid, omega, rs[: i + 1], us[: i + 1], float(rs[i]))
    polished, res, ok = _polish(model, omega, grid, seed)
    if not ok:
        raise NoConvergenceError(
            f"nodal polish failed at omega={omega:.6g} (residual {res:.3g})")
    got = _count_nodes(polished.values)
    if got != k_nodes:
        raise NoBracketError(
            f"polished profile has {got} crossings, wanted {k_nodes} "
            f"at omega={omega:.6g}")
    return _build_result(model, omega, grid, u0, polished, expect_nodes=k_nodes)


# ---------------------------------------------------------------------------
# curve sweeps and mass matching

def sweep_curve(model: NonlinearityModel, omega_list: Sequence[float],
                grid: RadialGrid):
    """One CurvePoint per frequency, with warm-started amplitude brackets.

    Frequencies without a bracket produce None entries and the sweep
    continues.  The returned list parameterizes the mass-energy curve.
    """
    omegas = list(omega_list)
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise ValueError("omega_list must be strictly increasing")
    points: list = []
    hint = None
    for om in omegas:
        try:
            res = find_ground_state(model, om, grid, _hint=hint)
        except (NoBracketError, NoConvergenceError):
            if hint is not None:
                # the warm window can mislead near the existence edge; give
                # the frequency one cold retry before marking it absent
                try:
                    res = find_ground_state(model, om, grid)
                except (NoBracketError, NoConvergenceError):
                    points.append(None)
                    hint = None
                    continue
            else:
                points.append(None)
                hint = None
                continue
        points.append(CurvePoint(omega=om, mass=res.mass, energy=res.energy,
                                 action=res.action, u0=res.u0))
        hint = (res.u0 * (1 - 1e-9), res.u0 * (1 + 1e-9))
    return points


def curve_mass_minimum(points) -> tuple:
    """(omega, index) of the smallest mass among present sweep points."""
    best = None
    for i, p in enumerate(points):
        if p is None:
            continue
        if best is None or p.mass < points[best].mass:
            best = i
    if best is None:
        raise ValueError("no present points in sweep")
    return points[best].omega, best


def match_mass(model: NonlinearityModel, target_mass: float, branch: Branch,
               grid: RadialGrid, curve=None, max_iter: int = 40) -> ShootResult:
    """Profile on the requested curve side whose mass hits the target.

    Needs sweep data bracketing the target on the chosen monotone side; a
    default internal sweep is computed when none is passed.  Iterates a
    secant step in frequency until the mass matches to 1e-6 relative.
    """
    if target_mass <= 0:
        raise ValueError("target mass must be positive")
    if curve is None:
        # the frequency floor keeps the far-field tail representable on the
        # caller's grid: the profile needs roughly 20 e-foldings of decay
        om_lo = max(0.002, (20.0 / grid.r_max) ** 2)
        curve = sweep_curve(model, list(np.geomspace(om_lo, 0.06, 12))
                            + [0.08, 0.11, 0.15, 0.175], grid)
    pts = [p for p in curve if p is not None]
    if len(pts) < 3:
        raise NoBracketError("sweep data too sparse for mass matching")
    om_star, _ = curve_mass_minimum(pts)
    if branch is Branch.HIGH_OMEGA:
        side = [p for p in pts if p.omega <= om_star]
    else:
        side = [p for p in pts if p.omega >= om_star]
    side.sort(key=lambda p: p.mass)
    masses = [p.mass for p in side]
    if not masses or not (masses[0] <= target_mass <= masses[-1]):
        raise NoBracketError(
            f"target mass {target_mass:.6g} outside the sampled "
            f"{branch.value} branch range [{masses[0] if masses else math.nan:.6g}, "
            f"{masses[-1] if masses else math.nan:.6g}]")
    j = int(np.searchsorted(masses, target_mass))
    p_lo = side[max(0, j - 1)]
    p_hi = side[min(len(side) - 1, j)]
    wa, ma = p_lo.omega, p_lo.mass
    wb, mb = p_hi.omega, p_hi.mass
    hint = (min(p_lo.u0, p_hi.u0) * 0.98, max(p_lo.u0, p_hi.u0) * 1.02)
    best = None
    for _ in range(max_iter):
        if abs(mb - ma) < 1e-14 * target_mass:
            w_next = 0.5 * (wa + wb)
        else:
            w_next = wa + (target_mass - ma) * (wb - wa) / (mb - ma)
        lo_w, hi_w = (wa, wb) if wa < wb else (wb, wa)
        if not (lo_w <= w_next <= hi_w):
            w_next = 0.5 * (wa + wb)
        res = find_ground_state(model, w_next, grid, _hint=hint)
        hint = (res.u0 * (1 - 1e-6), res.u0 * (1 + 1e-6))
        best = res
        if abs(res.mass - target_mass) <= 1e-6 * target_mass:
            return res
        # keep the bracket on the monotone side: replace the endpoint whose
        # mass lies on the same side of the target
        if (res.mass - target_mass) * (ma - target_mass) > 0:
            wa, ma = w_next, res.mass
        else:
            wb, mb = w_next, res.mass
    raise NoConvergenceError(
        f"mass match stalled: best |mass - target| = "
        f"{abs(best.mass - target_mass):.3g} after {max_iter} iterations")
