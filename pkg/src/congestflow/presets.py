"""Experiment presets: named, reproducible studies with pass/fail reports.

Each preset maps to one acceptance check of the sharp-interface theory:

  gamma_limit       energy of a half-square tracks the perimeter functional
  firstvar_identity exact divergence-form identity for the first variation
  firstvar_limit    diffuse first variation converges to the curvature form
  relax_ellipse     constrained gradient flow invariants on an ellipse
  contact_angle     interface meets the wall at the predicted angle
  surface_tension   modified pressure scales like curvature over 4 sigma^3/2
  energy_descent    discrete energy inequality along the flow

`run_preset` executes one preset, writes per-point run directories plus a
top-level report.json, and returns the report.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import analysis
from .chem import ChemParams, solve_phi
from .config import RunConfig, parse_config
from .energy import EnergyParams, boundary_weight, energy_terms
from .errors import ParameterError
from .grid import GridSpec, RobinSpec, ScalarField
from .runner import _energy_rows, _json_safe, simulate, write_run
from .shapes import build_shape, half_square, random_admissible

__all__ = ["PRESET_NAMES", "default_config", "run_preset"]

PRESET_NAMES = (
    "gamma_limit",
    "firstvar_identity",
    "firstvar_limit",
    "relax_ellipse",
    "contact_angle",
    "surface_tension",
    "energy_descent",
)

_DEFAULTS = {
    "gamma_limit": """
[grid]
cells = 100 100
lengths = 1.0 1.0
[model]
epsilon = [0.04, 0.02, 0.01]
sigma = 1.0
[initial]
shape = half_square
[run]
t_final = 0.0
""",
    "firstvar_identity": """
[grid]
cells = 128 128
lengths = 1.0 1.0
[model]
epsilon = 0.05
sigma = 1.0
[initial]
shape = random
seed = 7
[run]
t_final = 0.0
seed = 7
""",
    "firstvar_limit": """
[grid]
cells = 100 100
lengths = 1.0 1.0
[model]
epsilon = [0.04, 0.02, 0.01]
sigma = 1.0
alpha = 0.0
beta = 1.0
[initial]
shape = disc
center = 0.5 0.5
radius = 0.25
[run]
t_final = 0.0
""",
    "relax_ellipse": """
[grid]
cells = 128 128
lengths = 1.0 1.0
[model]
epsilon = 0.02
sigma = 1.0
mu = 1e-4
[jko]
tau = 5e-4
[initial]
shape = ellipse
center = 0.5 0.5
semi_axes = 0.3 0.18
[run]
t_final = 0.1
log_every = 10
""",
    "contact_angle": """
[grid]
cells = 128 128
lengths = 1.0 1.0
[model]
epsilon = 0.03125
sigma = 1.0
alpha = 0.0
beta = 1.0
mu = 1e-4
[jko]
tau = 5e-4
[initial]
shape = half_disc_on_wall
center_x = 0.5
radius = 0.25
[run]
t_final = 0.005
log_every = 2
""",
    "surface_tension": """
[grid]
cells = 96 96
lengths = 1.0 1.0
[model]
epsilon = 0.05
sigma = 1.0
mu = 1e-4
[jko]
tau = 5e-4
[initial]
shape = two_discs
center = 0.32 0.5
radius = 0.22
center2 = 0.75 0.5
radius2 = 0.11
[run]
t_final = 5e-4
log_every = 1
""",
    "energy_descent": """
[grid]
cells = 64 64
lengths = 1.0 1.0
[model]
epsilon = 0.0625
sigma = 1.0
mu = 1e-4
[jko]
tau = 5e-4
[initial]
shape = ellipse
center = 0.5 0.5
semi_axes = 0.3 0.18
[run]
t_final = 0.005
log_every = 1
""",
}


def default_config(name: str) -> str:
    if name not in PRESET_NAMES:
        raise ParameterError(f"unknown preset '{name}' (choose from {PRESET_NAMES})")
    return _DEFAULTS[name].strip() + "\n"


def _metric(measured, target, tolerance, passed=None) -> dict:
    if passed is None:
        passed = bool(abs(measured - target) <= tolerance)
    return {
        "measured": _json_safe(measured),
        "target": _json_safe(target),
        "tolerance": _json_safe(tolerance),
        "passed": bool(passed),
    }


def _trend_metric(values, decreasing=True, slack=0.0) -> dict:
    diffs = np.diff(values)
    ok = bool(np.all(diffs <= slack) if decreasing else np.all(diffs >= -slack))
    return {
        "measured": [_json_safe(v) for v in values],
        "target": "monotone " + ("decreasing" if decreasing else "increasing"),
        "tolerance": _json_safe(slack),
        "passed": ok,
    }


def run_preset(name: str, config_text: str | None, out_dir, override_scale_guard=False) -> dict:
    """Execute a preset, persist artifacts under out_dir, return the report."""
    if name not in PRESET_NAMES:
        raise ParameterError(f"unknown preset '{name}' (choose from {PRESET_NAMES})")
    text = config_text if config_text is not None else default_config(name)
    # The spec-scale presets intentionally run at epsilon near the resolution
    # guard; presets always report both scales instead of refusing.
    cfgs = parse_config(text, override_scale_guard=True)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _RUNNERS[name](cfgs, out_dir)
    report["preset"] = name
    report["n_sweep_points"] = len(cfgs)
    report["passed"] = all(m["passed"] for m in report["metrics"].values())
    (out_dir / "report.json").write_text(
        json.dumps(_json_safe(report), indent=2, sort_keys=True) + "\n"
    )
    return report


def _point_dir(out_dir: Path, i: int) -> Path:
    return out_dir / f"point_{i:03d}"


def _run_and_write(cfg: RunConfig, run_dir: Path, report: dict, with_recovery=False):
    rho0, states, summary = simulate(cfg, with_recovery=with_recovery)
    write_run(run_dir, cfg, states, summary, report)
    return states, summary


# ---------------------------------------------------------------------------
# preset bodies


def _gamma_geometry(eps: float, robin: RobinSpec) -> tuple[GridSpec, float]:
    """Grid at h = eps/4 and the half-square margin for the given condition.

    The wall-touching half square realizes the Neumann target 1/4.  Under
    Dirichlet walls the pointwise-limit boundary coefficient is 2 (not the
    capped wetting weight), so the 3/4 target is realized by the recovery
    geometry: the half square detached from every wall by 2 eps.
    """
    h = eps / 4.0
    n = round(1.0 / h)
    grid = GridSpec((n, n), (1.0, 1.0))
    margin = 2.0 * eps if robin.beta == 0.0 else 0.0
    return grid, margin


def _gamma_limit(cfgs, out_dir):
    base = cfgs[0]
    sigma = base.model.chem.sigma
    eps_values = [c.model.chem.epsilon for c in cfgs]
    report = {"metrics": {}, "j_eps": {}, "targets": {}}
    point = 0
    for bc_name, robin, target, tol in (
        ("neumann", RobinSpec(0.0, 1.0), 0.25, 0.05),
        ("dirichlet", RobinSpec(1.0, 0.0), 0.75, 0.08),
    ):
        j_seq = []
        for cfg in cfgs:
            eps = cfg.model.chem.epsilon
            grid, margin = _gamma_geometry(eps, robin)
            chem = ChemParams(epsilon=eps, sigma=sigma, robin=robin)
            energy = EnergyParams(chem=chem, mu=base.model.mu)
            pcfg = RunConfig(
                grid=grid,
                jko=_with_energy(cfg.jko, energy),
                shape="half_square",
                shape_params={"margin": margin},
                t_final=0.0,
                log_every=1,
                output_dir=str(out_dir),
                seed=cfg.seed,
                scale_guard_overridden=True,
            )
            _run_and_write(pcfg, _point_dir(out_dir, point), {"branch": bc_name})
            point += 1
            rho = half_square(grid, margin)
            phi = solve_phi(rho, chem)
            j_seq.append(energy_terms(rho, phi, chem)["j_direct"])
        errors = [abs(j - target) / target for j in j_seq]
        report["j_eps"][bc_name] = j_seq
        report["targets"][bc_name] = target
        report["metrics"][f"{bc_name}_final_error"] = _metric(
            errors[-1], 0.0, tol, passed=errors[-1] <= tol
        )
        # Slack absorbs rounding-level wiggle when the error sequence is flat
        # (at fixed epsilon/h the flat-interface error is pure discretization).
        report["metrics"][f"{bc_name}_error_trend"] = _trend_metric(
            errors, decreasing=True, slack=1e-6 * max(errors)
        )
    report["epsilon"] = eps_values
    return report


def _with_energy(jko, energy):
    from dataclasses import replace

    return replace(jko, energy=energy)


def _firstvar_identity(cfgs, out_dir):
    base = cfgs[0]
    report = {"metrics": {}, "residuals": {}}
    fns = (
        lambda x, y: np.cos(np.pi * y) + 0.3 * x,
        lambda x, y: np.sin(np.pi * x) * y + 0.2,
    )
    # Refinement study on the Neumann identity.
    resolutions = (32, 64, 128)
    residuals = []
    for n in resolutions:
        grid = GridSpec((n, n), base.grid.lengths)
        rho = random_admissible(grid, base.seed)
        xi = analysis.TestVectorField(grid, fns).as_vector_field()
        chem = ChemParams(
            epsilon=base.model.chem.epsilon,
            sigma=base.model.chem.sigma,
            robin=RobinSpec(0.0, 1.0),
        )
        residuals.append(analysis.firstvar_identity_check(rho, xi, chem)["residual"])
    slope = float(
        np.polyfit(np.log([1.0 / n for n in resolutions]), np.log(residuals), 1)[0]
    )
    report["residuals"]["neumann"] = residuals
    report["metrics"]["neumann_residual"] = _metric(residuals[-1], 0.0, 0.02, residuals[-1] <= 0.02)
    report["metrics"]["refinement_slope"] = _metric(slope, 1.0, 0.1, slope >= 0.9)

    grid = base.grid
    rho = random_admissible(grid, base.seed)
    xi = analysis.TestVectorField(grid, fns).as_vector_field()
    chem_robin = ChemParams(
        epsilon=base.model.chem.epsilon,
        sigma=base.model.chem.sigma,
        robin=RobinSpec(1.0, 1.0),
    )
    r_robin = analysis.firstvar_identity_check(rho, xi, chem_robin)["residual"]
    report["residuals"]["robin"] = r_robin
    report["metrics"]["robin_residual"] = _metric(r_robin, 0.0, 0.03, r_robin <= 0.03)

    _run_and_write(base, _point_dir(out_dir, 0), {"branch": "identity_field"})
    return report


def _firstvar_limit(cfgs, out_dir):
    report = {"metrics": {}, "lhs": [], "rhs": None, "epsilon": []}
    fns = (
        lambda x, y: np.cos(np.pi * y) + 0.3 * x,
        lambda x, y: np.sin(np.pi * x) * y + 0.2,
    )
    gaps = []
    rhs = None
    for i, cfg in enumerate(cfgs):
        eps = cfg.model.chem.epsilon
        h = eps / 4.0
        n = round(cfg.grid.lengths[0] / h)
        grid = GridSpec((n, n), cfg.grid.lengths)
        pcfg = _regrid(cfg, grid)
        rho = build_shape(grid, pcfg.shape, pcfg.shape_params)
        chem = ChemParams(epsilon=eps, sigma=cfg.model.chem.sigma, robin=cfg.model.chem.robin)
        phi = solve_phi(rho, chem)
        xi = analysis.TestVectorField(grid, fns)
        lhs = analysis.first_variation_lhs(rho, phi, xi.as_vector_field(), chem)
        curve = analysis.extract_interface(rho)
        rhs = analysis.first_variation_limit_rhs(curve, xi, rho, chem)
        gaps.append(abs(lhs - rhs))
        report["lhs"].append(lhs)
        report["epsilon"].append(eps)
        _run_and_write(pcfg, _point_dir(out_dir, i), {"branch": "limit_sweep"})
    report["rhs"] = rhs
    final_rel = gaps[-1] / abs(rhs)
    report["metrics"]["gap_trend"] = _trend_metric(gaps, decreasing=True)
    report["metrics"]["final_relative_gap"] = _metric(final_rel, 0.0, 0.10, final_rel <= 0.10)
    return report


def _relax_ellipse(cfgs, out_dir):
    cfg = cfgs[0]
    states, summary = _run_and_write(cfg, _point_dir(out_dir, 0), {"branch": "relax"})
    report = {"metrics": {}, "summary": summary}
    n_steps = summary["steps"]
    tol = cfg.jko.sinkhorn_tol
    drift = abs(summary["mass_drift"])
    drift_budget = max(n_steps, 1) * tol
    report["metrics"]["mass_drift"] = _metric(drift, 0.0, drift_budget, drift <= drift_budget)
    rho_max = max(float(np.max(st.rho.values)) for st in states)
    report["metrics"]["density_cap"] = _metric(rho_max, 1.0, tol, rho_max <= 1.0 + tol)
    report["metrics"]["energy_inequality"] = _metric(
        1.0 if summary["energy_inequality_ok"] else 0.0, 1.0, 0.0,
        bool(summary["energy_inequality_ok"]),
    )
    areas, isos = [], []
    for st in states:
        curve = analysis.extract_interface(st.rho)
        m = analysis.geometry_metrics(curve)
        areas.append(m["area"])
        isos.append(m["isoperimetric_ratio"])
    area_drift = (max(areas) - min(areas)) / areas[0]
    report["metrics"]["area_constancy"] = _metric(area_drift, 0.0, 0.01, area_drift <= 0.01)
    # Allow single-step noise: compare against the running best.
    best = np.minimum.accumulate(isos)
    noise = float(np.max(np.asarray(isos[1:]) - best[:-1])) if len(isos) > 1 else 0.0
    report["metrics"]["isoperimetric_trend"] = _metric(
        noise, 0.0, 5e-4, noise <= 5e-4
    )
    report["areas"] = areas
    report["isoperimetric"] = isos
    return report


def _contact_angle(cfgs, out_dir):
    cfg = cfgs[0]
    report = {"metrics": {}}
    # Orthogonal contact under Neumann walls.
    states, _ = _run_and_write(cfg, _point_dir(out_dir, 0), {"branch": "neumann"})
    rho_end = states[-1].rho
    curve = analysis.extract_interface(rho_end)
    contacts = analysis.contact_angle(curve, rho_end)
    w = boundary_weight(cfg.model.chem)
    target_cos = -min(1.0, w)
    target_theta = float(np.arccos(np.clip(target_cos, -1.0, 1.0)))
    if contacts:
        theta = float(np.mean([c.theta for c in contacts]))
        report["theta_measured"] = theta
        report["theta_target"] = target_theta
        report["cos_theta_measured"] = float(np.cos(theta))
        report["cos_theta_target"] = target_cos
        report["metrics"]["contact_angle"] = _metric(theta, target_theta, 0.15)
    else:
        report["metrics"]["contact_angle"] = _metric(np.nan, target_theta, 0.15, False)

    # Dewetting trend under Robin walls: with weight 1 on the boundary trace
    # the wall contact is penalized, so the contact line recedes.
    chem_r = ChemParams(
        epsilon=cfg.model.chem.epsilon,
        sigma=cfg.model.chem.sigma,
        robin=RobinSpec(1.0, 1.0),
    )
    cfg_r = _rechem(cfg, chem_r)
    states_r, _ = _run_and_write(cfg_r, _point_dir(out_dir, 1), {"branch": "robin"})
    wetting = [analysis.wall_contact_length(st.rho) for st in states_r]
    report["wetting_length"] = wetting
    report["metrics"]["wetting_trend"] = _trend_metric(
        wetting, decreasing=True, slack=min(cfg.grid.spacing)
    )
    return report


def _rechem(cfg: RunConfig, chem: ChemParams) -> RunConfig:
    from dataclasses import replace

    energy = EnergyParams(chem=chem, mu=cfg.model.mu)
    return replace(cfg, jko=_with_energy(cfg.jko, energy))


def _regrid(cfg: RunConfig, grid: GridSpec) -> RunConfig:
    from dataclasses import replace

    return replace(cfg, grid=grid)


def _interface_q_mean(state, rho: ScalarField, chem: ChemParams):
    """Sample the interface pressure trace (1/(2 sigma) - phi)/eps on the curve."""
    curve = analysis.extract_interface(rho)
    trace = ScalarField(
        rho.grid, (1.0 / (2.0 * chem.sigma) - state.phi.values) / chem.epsilon
    )
    res = analysis.surface_tension_check(trace, curve, chem.sigma)
    return curve, res


def _surface_tension(cfgs, out_dir):
    cfg = cfgs[0]
    sigma = cfg.model.chem.sigma
    report = {"metrics": {}}
    states, _ = _run_and_write(
        cfg, _point_dir(out_dir, 0), {"branch": "two_discs"}, with_recovery=True
    )
    st = states[-1]
    curve, res = _interface_q_mean(st, st.rho, cfg.model.chem)
    # Components are ordered longest first: big disc then small disc.
    if len(curve.components) >= 2 and len(res["mean_q"]) >= 2:
        q_big, q_small = res["mean_q"][0], res["mean_q"][1]
        r_big = cfg.shape_params["radius"]
        r_small = cfg.shape_params["radius2"]
        measured = q_small / q_big if q_big != 0 else np.inf
        target = r_big / r_small  # q ~ kappa ~ 1/r
        report["metrics"]["q_ratio"] = _metric(
            measured, target, 0.25 * target, abs(measured - target) <= 0.25 * target
        )
        report["q_means"] = [q_big, q_small]
    else:
        report["metrics"]["q_ratio"] = _metric(np.nan, np.nan, 0.0, False)
    report["slope"] = res["slope"]
    report["scatter"] = {
        "kappa": [float(k) for comp in curve.components for k in comp.kappa],
        "q": [float(v) for s in res["samples"] for v in s],
    }

    # Doubling sigma rescales the interface pressure by 2^(-3/2).
    chem2 = ChemParams(
        epsilon=cfg.model.chem.epsilon, sigma=2.0 * sigma, robin=cfg.model.chem.robin
    )
    cfg2 = _rechem(cfg, chem2)
    states2, _ = _run_and_write(
        cfg2, _point_dir(out_dir, 1), {"branch": "sigma_doubled"}, with_recovery=True
    )
    st2 = states2[-1]
    _, res2 = _interface_q_mean(st2, st2.rho, chem2)
    scaling = res2["mean_q_total"] / res["mean_q_total"] if res["mean_q_total"] else np.inf
    target = 2.0 ** (-1.5)
    report["metrics"]["sigma_scaling"] = _metric(
        scaling, target, 0.25 * target, abs(scaling - target) <= 0.25 * target
    )
    return report


def _energy_descent(cfgs, out_dir):
    cfg = cfgs[0]
    states, summary = _run_and_write(cfg, _point_dir(out_dir, 0), {"branch": "descent"})
    rows = _energy_rows(cfg, states)
    f_eps = [float(r[2]) for r in rows]
    budget = summary["bias_per_step"] * max(1, cfg.log_every)
    report = {"metrics": {}, "f_eps": f_eps, "bias_per_step": summary["bias_per_step"]}
    report["metrics"]["energy_inequality"] = _trend_metric(
        f_eps, decreasing=True, slack=budget
    )
    report["metrics"]["summary_inequality"] = _metric(
        1.0 if summary["energy_inequality_ok"] else 0.0, 1.0, 0.0,
        bool(summary["energy_inequality_ok"]),
    )
    return report


_RUNNERS = {
    "gamma_limit": _gamma_limit,
    "firstvar_identity": _firstvar_identity,
    "firstvar_limit": _firstvar_limit,
    "relax_ellipse": _relax_ellipse,
    "contact_angle": _contact_angle,
    "surface_tension": _surface_tension,
    "energy_descent": _energy_descent,
}
