"""Command-line front end: configuration, persistence, and orchestration.

Every command reads one YAML configuration (all values optional, defaults
below), resolves it against the defaults, and writes its numeric artifacts
into an output directory together with a manifest naming every emitted
file, the hash of the resolved configuration, the wall time, and the
package version.  Identical resolved configurations produce identical
numeric payloads: all randomness is seeded from the configuration and
iteration orders are fixed.

Configuration grammar (YAML, nested sections; unknown keys are rejected)::

    model:
      kind: cubic-quintic      # or power-sum
      dimension: 3
      terms: [[1.0, 4.0], [-1.0, 6.0]]   # (coefficient, exponent), power-sum only
    grid:
      r_max: 200.0
      n: 4096
    flow:
      dt: 5.0e-3
      max_steps: 20000
      tol: 1.0e-6
      dt_max: 50.0
      newton: true
      bracket: [20.0, 500.0]   # mass bracket for the threshold bisection
    minimax:
      segments: 32
      iters: 400
      step: 0.1
    dynamics:
      dt: 1.0e-3
      record_every: 50
    out: normwave_out          # overridden by --out, then by NORMWAVE_OUT
    seed: 20260825             # probe-family seed for the rho certification

Exit codes: 0 success, 2 configuration or usage error, 3 structural
hypothesis failure, 4 solver did not converge, 5 no bracket or admissible
path for the requested parameters.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np
import yaml

from . import __version__
from .model import (
    HypothesisError,
    NonlinearityModel,
    check_hypotheses,
)
from .radial_field import (
    NoConvergenceError,
    RadialGrid,
    RealField,
    energy,
    load_field,
    multiplier,
    residual,
    save_field,
    scale_mass,
    regrid,
)
from .shooting import (
    Branch,
    NoBracketError,
    ShootResult,
    StepUnderflowError,
    curve_mass_minimum,
    find_ground_state,
    find_nodal_state,
    sweep_curve,
)
from .flow import (
    FlowConfig,
    MassThresholds,
    compute_thresholds,
    report_to_json,
    solve_global,
    solve_local,
)
from .minimax import saddle_report
from .dynamics import (
    from_real,
    evolve,
    stability_probe,
)

SWEEP_SCHEMA = "normwave-sweep v1"
CFIELD_SCHEMA = "normwave-cfield v1"

_DEFAULTS = {
    "model": {
        "kind": "cubic-quintic",
        "dimension": 3,
        "terms": [[1.0, 4.0], [-1.0, 6.0]],
    },
    "grid": {"r_max": 200.0, "n": 4096},
    "flow": {
        "dt": 5e-3,
        "max_steps": 20000,
        "tol": 1e-6,
        "dt_max": 50.0,
        "newton": True,
        "bracket": [20.0, 500.0],
    },
    "minimax": {"segments": 32, "iters": 400, "step": 0.1},
    "dynamics": {"dt": 1e-3, "record_every": 50},
    "out": "normwave_out",
    "seed": 20260825,
}

# short condition codes accepted by `check --require`, in curve order
_CONDITION_CODES = {
    "f1": "vanishing_slope_at_zero",
    "f2": "growth_admissible",
    "f3": "F_positive_somewhere",
    "f4": "F_supercritical_at_zero",
    "f5": "ar_inequality",
    "a1": "mass_zero_threshold",
    "a2": "mass_positive_threshold",
    "a3": "ground_state_comparison",
}


def _sig(x) -> float:
    """Round-trip a float through 17 significant decimal digits (identity)."""
    return float(f"{float(x):.17g}")


def _jsonify(obj):
    """Recursively coerce numpy scalars/arrays and format floats."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _sig(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    return obj


def _deep_merge(defaults: dict, override: dict, path: str = "") -> dict:
    out = {}
    for key, dval in defaults.items():
        if key in override:
            oval = override[key]
            if isinstance(dval, dict):
                if not isinstance(oval, dict):
                    raise click.UsageError(
                        f"config section '{path}{key}' must be a mapping")
                out[key] = _deep_merge(dval, oval, f"{path}{key}.")
            else:
                out[key] = oval
        else:
            out[key] = dval
    unknown = set(override) - set(defaults)
    if unknown:
        raise click.UsageError(
            f"unknown config key(s): {', '.join(sorted(path + k for k in unknown))}")
    return out


def _load_config(path) -> dict:
    if path is None:
        return _deep_merge(_DEFAULTS, {})
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise click.UsageError(f"cannot read config file: {exc}")
    except yaml.YAMLError as exc:
        raise click.UsageError(f"config file is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise click.UsageError("config file must contain a YAML mapping")
    return _deep_merge(_DEFAULTS, raw)


def _build_model(cfg: dict) -> NonlinearityModel:
    spec = cfg["model"]
    kind = str(spec["kind"]).replace("_", "-")
    dim = spec["dimension"]
    if not isinstance(dim, int):
        raise click.UsageError("model.dimension must be an integer")
    try:
        if kind == "cubic-quintic":
            return NonlinearityModel.cubic_quintic(dim)
        if kind == "power-sum":
            return NonlinearityModel.power_sum(
                [tuple(t) for t in spec["terms"]], dim)
    except (ValueError, TypeError) as exc:
        raise click.UsageError(f"invalid model spec: {exc}")
    raise click.UsageError(
        f"model.kind must be 'cubic-quintic' or 'power-sum', got {spec['kind']!r}")


def _build_grid(cfg: dict, model: NonlinearityModel) -> RadialGrid:
    spec = cfg["grid"]
    try:
        return RadialGrid(model.dimension, float(spec["r_max"]), int(spec["n"]))
    except (ValueError, TypeError) as exc:
        raise click.UsageError(f"invalid grid spec: {exc}")


def _flow_config(cfg: dict, grid: RadialGrid,
                 rho_hat: float | None = None) -> FlowConfig:
    spec = cfg["flow"]
    try:
        return FlowConfig(dt=float(spec["dt"]), max_steps=int(spec["max_steps"]),
                          tol=float(spec["tol"]), rho_hat=rho_hat, grid=grid,
                          dt_max=float(spec["dt_max"]), newton=bool(spec["newton"]))
    except (ValueError, TypeError) as exc:
        raise click.UsageError(f"invalid flow spec: {exc}")


class _Run:
    """Artifact bookkeeping for one command invocation."""

    def __init__(self, ctx_obj: dict, command: str):
        self.command = command
        self.config = ctx_obj["config"]
        self.t0 = time.perf_counter()
        out = ctx_obj.get("out_flag") or os.environ.get("NORMWAVE_OUT") \
            or self.config["out"]
        self.out_dir = Path(out)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[str] = []
        # the resolved configuration (defaults applied) is itself an artifact
        resolved = dict(self.config)
        resolved["jobs"] = ctx_obj.get("jobs", 1)
        self.resolved_text = yaml.safe_dump(resolved, sort_keys=True)
        self.config_hash = hashlib.sha256(
            self.resolved_text.encode()).hexdigest()
        cfg_name = f"{command}_config.yaml"
        (self.out_dir / cfg_name).write_text(self.resolved_text)
        self.artifacts.append(cfg_name)

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out_dir / name

    def write_json(self, name: str, doc: dict) -> Path:
        p = self.path(name)
        with open(p, "w") as fh:
            json.dump(_jsonify(doc), fh, indent=2)
            fh.write("\n")
        return p

    def finish(self) -> Path:
        manifest_name = f"{self.command}_manifest.json"
        doc = {
            "command": self.command,
            "config_hash": self.config_hash,
            "artifacts": sorted(self.artifacts + [manifest_name]),
            "wall_time_s": time.perf_counter() - self.t0,
            "version": __version__,
        }
        p = self.out_dir / manifest_name
        with open(p, "w") as fh:
            json.dump(_jsonify(doc), fh, indent=2)
            fh.write("\n")
        click.echo(f"wrote {len(doc['artifacts'])} artifact(s) to {self.out_dir}")
        return p


# -- thresholds persistence --------------------------------------------------

def _save_thresholds(run: _Run, th: MassThresholds) -> None:
    save_field(run.path("thresholds_reference.csv"), th.reference)
    run.write_json("thresholds.json", {
        "mstar": th.mstar,
        "mstarstar": th.mstarstar,
        "rho_hat": th.rho_hat,
        "reference_csv": "thresholds_reference.csv",
    })


def _load_thresholds(path) -> MassThresholds:
    p = Path(path)
    try:
        with open(p) as fh:
            doc = json.load(fh)
        reference = load_field(p.parent / doc["reference_csv"])
        return MassThresholds(mstar=float(doc["mstar"]),
                              mstarstar=float(doc["mstarstar"]),
                              rho_hat=float(doc["rho_hat"]),
                              reference=reference)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot load thresholds file {path}: {exc}")


def _thresholds_for(cfg: dict, model, grid, thresholds_path) -> MassThresholds:
    if thresholds_path is not None:
        return _load_thresholds(thresholds_path)
    bracket = tuple(float(b) for b in cfg["flow"]["bracket"])
    return compute_thresholds(model, grid, _flow_config(cfg, grid),
                              bracket=bracket, seed=int(cfg["seed"]))


# -- command group -----------------------------------------------------------

@click.group()
@click.option("--config", "-c", "config_path", type=click.Path(), default=None,
              help="YAML configuration file; defaults apply where absent.")
@click.option("--out", "-o", "out_flag", type=click.Path(), default=None,
              help="Output directory (overrides NORMWAVE_OUT and the config).")
@click.option("--jobs", "-j", type=click.IntRange(min=1), default=1,
              show_default=True, help="Worker threads for sweep points.")
@click.version_option(version=__version__)
@click.pass_context
def cli(ctx, config_path, out_flag, jobs):
    """Normalized standing waves: shooting, flow, mountain pass, dynamics."""
    ctx.obj = {
        "config": _load_config(config_path),
        "out_flag": out_flag,
        "jobs": jobs,
    }


@cli.command()
@click.option("--require", "required", multiple=True,
              help="Condition that must hold (short code f1..f5/a1..a3 or "
                   "full flag name); exit 3 otherwise.")
@click.pass_obj
def check(obj, required):
    """Check the structural conditions of the configured nonlinearity."""
    run = _Run(obj, "check")
    model = _build_model(run.config)
    report = check_hypotheses(model)
    flags = {name: getattr(report, name) for name in _CONDITION_CODES.values()}
    for code, name in _CONDITION_CODES.items():
        click.echo(f"  [{code}] {name:28s} {flags[name]}")
    if report.theta is not None:
        click.echo(f"  inequality exponent witness: {report.theta:.17g}")
    if report.zeta is not None:
        click.echo(f"  positivity witness zeta:     {report.zeta:.17g}")
    for msg in report.messages:
        click.echo(f"  note: {msg}")
    run.write_json("check_report.json", {
        "flags": flags,
        "theta": report.theta,
        "zeta": report.zeta,
        "messages": list(report.messages),
    })
    run.finish()
    bad = []
    for want in required:
        name = _CONDITION_CODES.get(want, want)
        if name not in flags:
            raise click.UsageError(f"unknown condition {want!r}")
        if flags[name] != "holds":
            bad.append(want)
    if bad:
        raise HypothesisError(
            f"required condition(s) do not hold: {', '.join(bad)}")


@cli.command()
@click.pass_obj
def thresholds(obj):
    """Compute the mass thresholds and the small-gradient threshold."""
    run = _Run(obj, "thresholds")
    model = _build_model(run.config)
    grid = _build_grid(run.config, model)
    th = _thresholds_for(run.config, model, grid, None)
    _save_thresholds(run, th)
    click.echo(f"mstar     = {th.mstar:.17g}")
    click.echo(f"mstarstar = {th.mstarstar:.17g}")
    click.echo(f"rho_hat   = {th.rho_hat:.17g}")
    run.finish()


@cli.command()
@click.argument("mass", type=float)
@click.pass_obj
def ground(obj, mass):
    """Flow to the global constrained minimizer at the given mass."""
    run = _Run(obj, "ground")
    model = _build_model(run.config)
    grid = _build_grid(run.config, model)
    report = solve_global(model, mass, _flow_config(run.config, grid))
    doc = report_to_json(report, field_csv=run.path("ground_field.csv"))
    run.write_json("ground_report.json", doc)
    click.echo(f"{report.classification.value}: I = {report.functionals.energy:.10g}, "
               f"mu = {report.multiplier:.10g}")
    run.finish()


@cli.command()
@click.argument("mass", type=float)
@click.option("--thresholds", "thresholds_path", type=click.Path(), default=None,
              help="thresholds.json from a previous `thresholds` run.")
@click.pass_obj
def local(obj, mass, thresholds_path):
    """Flow to the positive-energy local minimizer at the given mass."""
    run = _Run(obj, "local")
    model = _build_model(run.config)
    grid = _build_grid(run.config, model)
    th = _thresholds_for(run.config, model, grid, thresholds_path)
    cfg = _flow_config(run.config, grid, rho_hat=th.rho_hat)
    seed = scale_mass(regrid(th.reference, grid), mass)
    report = solve_local(model, mass, cfg, seed)
    doc = report_to_json(report, field_csv=run.path("local_field.csv"))
    doc["thresholds"] = {"mstar": th.mstar, "mstarstar": th.mstarstar,
                         "rho_hat": th.rho_hat}
    run.write_json("local_report.json", doc)
    click.echo(f"{report.classification.value}: I = {report.functionals.energy:.10g}, "
               f"mu = {report.multiplier:.10g}")
    run.finish()


def _shoot_result_doc(res: ShootResult, field_name: str) -> dict:
    return {
        "omega": res.omega,
        "u0": res.u0,
        "node_count": res.node_count,
        "mass": res.mass,
        "energy": res.energy,
        "action": res.action,
        "pohozaev_residual": res.pohozaev_residual,
        "residual": res.residual,
        "field_csv": field_name,
    }


def _write_sweep_csv(path, points, omegas, model, grid) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {SWEEP_SCHEMA} kind={model.kind.value} "
                 f"N={model.dimension} r_max={grid.r_max:.17g} n={grid.n}\n")
        fh.write("omega,u0,mass,energy,action,nodes\n")
        for om, p in zip(omegas, points):
            if p is None:
                fh.write(f"{om:.17g},,,,,\n")
            else:
                fh.write(f"{p.omega:.17g},{p.u0:.17g},{p.mass:.17g},"
                         f"{p.energy:.17g},{p.action:.17g},0\n")


def _write_sweep_svg(path, points) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "normwave"
    present = [p for p in points if p is not None]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if present:
        om_star, _ = curve_mass_minimum(present)
        lo = [p for p in present if p.omega <= om_star]
        hi = [p for p in present if p.omega >= om_star]
        ax.plot([p.mass for p in hi], [p.energy for p in hi], "o-",
                color="tab:blue", label="minimizing family")
        ax.plot([p.mass for p in lo], [p.energy for p in lo], "s-",
                color="tab:red", label="mountain-pass family")
        ax.legend()
        ax.set_xscale("log")
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("mass")
    ax.set_ylabel("constrained energy I")
    ax.set_title("mass-energy curve of the standing-wave families")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _parallel_sweep(model, omegas, grid, jobs: int):
    """Sweep in parameter-contiguous chunks across a small thread pool.

    Each chunk keeps the serial warm-start behavior internally; outputs are
    reassembled in parameter order regardless of completion order.
    """
    if jobs <= 1 or len(omegas) <= 2:
        return sweep_curve(model, omegas, grid)
    chunks = [list(c) for c in np.array_split(omegas, jobs) if len(c)]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: sweep_curve(model, c, grid), chunks))
    return [p for part in parts for p in part]


@cli.command()
@click.argument("omega", type=float, required=False)
@click.option("--sweep", "sweep_args", nargs=3, type=float, default=None,
              help="Sweep frequencies: LO HI COUNT.")
@click.option("--nodes", "k_nodes", type=click.IntRange(min=0), default=None,
              help="Prescribed interior sign changes for a single shot.")
@click.pass_obj
def shoot(obj, omega, sweep_args, k_nodes):
    """Shoot standing-wave profiles at fixed frequency, or sweep a curve."""
    if sweep_args and omega is not None:
        raise click.UsageError("give either OMEGA or --sweep, not both")
    if sweep_args and k_nodes is not None:
        raise click.UsageError("--nodes applies to a single shot only")
    if not sweep_args and omega is None:
        raise click.UsageError("give a frequency OMEGA or --sweep LO HI COUNT")
    run = _Run(obj, "shoot")
    model = _build_model(run.config)
    grid = _build_grid(run.config, model)
    if sweep_args:
        lo, hi, count = sweep_args
        count = int(round(count))
        if not (0.0 < lo < hi) or count < 2:
            raise click.UsageError("--sweep needs 0 < LO < HI and COUNT >= 2")
        omegas = list(np.linspace(lo, hi, count))
        points = _parallel_sweep(model, omegas, grid, obj.get("jobs", 1))
        _write_sweep_csv(run.path("sweep.csv"), points, omegas, model, grid)
        _write_sweep_svg(run.path("sweep.svg"), points)
        present = sum(p is not None for p in points)
        click.echo(f"sweep: {present}/{count} frequencies carried a profile")
    else:
        if k_nodes:
            res = find_nodal_state(model, omega, k_nodes, grid)
        else:
            res = find_ground_state(model, omega, grid)
        save_field(run.path("shoot_field.csv"), res.profile)
        run.write_json("shoot_report.json",
                       _shoot_result_doc(res, "shoot_field.csv"))
        click.echo(f"omega = {res.omega:.10g}: u0 = {res.u0:.10g}, "
                   f"mass = {res.mass:.10g}, I = {res.energy:.10g}")
    run.finish()


@cli.command()
@click.argument("mass", type=float)
@click.option("--thresholds", "thresholds_path", type=click.Path(), default=None,
              help="thresholds.json from a previous `thresholds` run.")
@click.pass_obj
def mpass(obj, mass, thresholds_path):
    """Relax an admissible path into the mountain-pass saddle at a mass."""
    run = _Run(obj, "mpass")
    cfg = run.config
    model = _build_model(cfg)
    grid = _build_grid(cfg, model)
    th = _thresholds_for(cfg, model, grid, thresholds_path)
    mm = cfg["minimax"]
    report = saddle_report(model, mass, grid, thresholds=th,
                           segments=int(mm["segments"]), iters=int(mm["iters"]),
                           step=float(mm["step"]),
                           config=_flow_config(cfg, grid, rho_hat=th.rho_hat))
    doc = report_to_json(report.polished,
                         field_csv=run.path("mpass_field.csv"))
    trace_path = run.path("mpass_trace.csv")
    with open(trace_path, "w") as fh:
        fh.write("iteration,path_max\n")
        for i, level in enumerate(report.trace):
            fh.write(f"{i},{level:.17g}\n")
    run.write_json("mpass_report.json", {
        "mass": report.mass,
        "level": report.level,
        "rho_hat": report.rho_hat,
        "match_energy": report.match_energy,
        "match_rel_error": report.match_rel_error,
        "polished": doc,
        "trace_csv": "mpass_trace.csv",
    })
    click.echo(f"pass level = {report.level:.10g} (barrier {report.rho_hat:.10g}), "
               f"matched shooting level within {report.match_rel_error:.3g}")
    run.finish()


def _save_cfield(path, psi) -> None:
    g = psi.grid
    with open(path, "w") as fh:
        fh.write(f"# {CFIELD_SCHEMA} N={g.dimension} "
                 f"r_max={g.r_max:.17g} n={g.n}\n")
        fh.write("r,re,im\n")
        for r, v in zip(g.r, psi.values):
            fh.write(f"{r:.17g},{v.real:.17g},{v.imag:.17g}\n")


@cli.command("evolve")
@click.argument("field", type=click.Path(exists=True))
@click.argument("horizon", type=float, metavar="T")
@click.pass_obj
def evolve_cmd(obj, field, horizon):
    """Evolve a profile under the time-dependent equation for time T."""
    run = _Run(obj, "evolve")
    cfg = run.config
    model = _build_model(cfg)
    u = load_field(field)
    if u.grid.dimension != model.dimension:
        raise click.UsageError("field dimension differs from the model")
    dt = float(cfg["dynamics"]["dt"])
    traj = evolve(from_real(u), horizon, dt, model,
                  record_every=int(cfg["dynamics"]["record_every"]))
    traj.to_csv(run.path("evolve_trajectory.csv"))
    _save_cfield(run.path("evolve_final.csv"), traj.final)
    m0, e0 = traj.mass[0], traj.energy[0]
    mass_drift = float(np.max(np.abs(traj.mass - m0)) / m0)
    energy_drift = float(np.max(np.abs(traj.energy - e0)) / max(1.0, abs(e0)))
    run.write_json("evolve_report.json", {
        "horizon": horizon,
        "dt": dt,
        "records": len(traj.times),
        "mass_initial": m0,
        "energy_initial": e0,
        "mass_drift_rel": mass_drift,
        "energy_drift_rel": energy_drift,
        "trajectory_csv": "evolve_trajectory.csv",
        "final_csv": "evolve_final.csv",
    })
    click.echo(f"T = {horizon:g}: mass drift {mass_drift:.3g}, "
               f"energy drift {energy_drift:.3g}")
    run.finish()


def _as_shoot_result(u: RealField, model) -> ShootResult:
    """Wrap a stored profile as a certified-shape result for probing.

    The stored field must be a standing-wave profile; its frequency is
    recovered from the multiplier identity and the reported functionals
    are recomputed on the stored grid.
    """
    om = multiplier(u, model)
    fns = energy(u, model, omega=om)
    signs = np.sign(u.values[np.abs(u.values) > 1e-12 * np.max(np.abs(u.values))])
    nodes = int(np.sum(signs[1:] != signs[:-1])) if signs.size else 0
    u0 = float((9.0 * u.values[0] - u.values[1]) / 8.0)
    return ShootResult(profile=u, u0=u0, omega=om, node_count=nodes,
                       mass=fns.mass, energy=fns.energy, action=fns.action,
                       pohozaev_residual=abs(fns.pohozaev),
                       residual=residual(u, om, model))


@cli.command()
@click.argument("field", type=click.Path(exists=True))
@click.argument("epsilon", type=float)
@click.argument("horizon", type=float, metavar="T")
@click.pass_obj
def stability(obj, field, epsilon, horizon):
    """Kick a stored standing-wave profile and classify the response."""
    run = _Run(obj, "stability")
    cfg = run.config
    model = _build_model(cfg)
    u = load_field(field)
    if u.grid.dimension != model.dimension:
        raise click.UsageError("field dimension differs from the model")
    res = _as_shoot_result(u, model)
    verdict = stability_probe(res, epsilon, horizon,
                              float(cfg["dynamics"]["dt"]), model)
    verdict.to_csv(run.path("stability_distance.csv"))
    run.write_json("stability_report.json", {
        "epsilon": verdict.epsilon,
        "horizon": verdict.horizon,
        "omega_recovered": res.omega,
        "mass": res.mass,
        "max_distance": verdict.max_distance,
        "threshold": verdict.threshold,
        "verdict": verdict.verdict.value,
        "distance_csv": "stability_distance.csv",
    })
    click.echo(f"{verdict.verdict.value}: max distance {verdict.max_distance:.6g} "
               f"vs threshold {verdict.threshold:.6g}")
    run.finish()


def main(argv=None) -> None:
    """Entry point translating domain errors into the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="normwave", standalone_mode=True)
    except HypothesisError as exc:
        click.echo(f"hypothesis failure: {exc}", err=True)
        sys.exit(3)
    except NoBracketError as exc:
        click.echo(f"no bracket: {exc}", err=True)
        sys.exit(5)
    except (NoConvergenceError, StepUnderflowError) as exc:
        click.echo(f"no convergence: {exc}", err=True)
        sys.exit(4)
    except (ValueError, OSError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
