"""Minimizing-movement (JKO) time stepping under the congestion constraint.

One step solves

    rho_n = argmin { W2(rho, rho_{n-1})^2 / (2 tau) + F(rho) : rho <= 1 },

with the Wasserstein term replaced by its entropic surrogate (kernel
exp(-|x-y|^2/(2 lambda))).  The nonconvex interaction is handled by
majorize-minimize: freezing the chemical field phi turns the interaction into
the linear potential V = (1/(2 sigma) - phi)/eps, which majorizes it because
-(1/2 eps) int rho phi[rho] is concave in rho.  The resulting convex inner
problem is solved by Sinkhorn-type scaling iterations whose right update is a
closed-form pointwise proximal step of (mu * entropy + linear V + box
constraint); the multiplier of the cap at 1 is the discrete congestion
pressure.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chem import check_admissible, solve_phi
from .energy import EnergyBreakdown, EnergyParams, energy_terms, entropy_integral
from .errors import ParameterError, SolverError, StepError
from .grid import (
    GridSpec,
    ScalarField,
    VectorField,
    gradient,
    integrate,
)
from .sinkhorn import (
    TransportPlan,
    _raw_dual_value,
    _symmetric_potential,
    barycentric_map,
    log_gibbs_conv,
)

__all__ = [
    "JKOParams",
    "JKOState",
    "jko_step",
    "barycentric_velocity",
    "recover_pressure",
    "modified_pressure",
    "run_flow",
]

DELTA_SAT = 1e-3
DELTA_SUPP = 1e-8
_NEG_INF = -np.inf
_LOG_FLOOR = -690.0  # below this, exp underflows; treat the cell as empty


@dataclass(frozen=True)
class JKOParams:
    """Time step, entropic regularization and solver controls."""

    tau: float
    entropic_lambda: float
    sinkhorn_tol: float = 1e-9
    sinkhorn_max_iter: int = 5000
    outer_fixed_point_iters: int = 3
    energy: EnergyParams = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ParameterError("tau must be positive")
        if self.entropic_lambda <= 0:
            raise ParameterError("entropic_lambda must be positive")
        if self.sinkhorn_tol <= 0 or self.sinkhorn_max_iter <= 0:
            raise ParameterError("solver tolerances must be positive")
        if self.outer_fixed_point_iters < 1:
            raise ParameterError("need at least one outer iteration")
        if self.energy is None:
            raise ParameterError("energy parameters are required")


@dataclass(frozen=True)
class JKOState:
    """One accepted step: fields, energy row and transport diagnostics."""

    n: int
    rho: ScalarField
    phi: ScalarField
    v: VectorField
    p: ScalarField
    q: ScalarField
    energy_row: EnergyBreakdown
    w2_step_cost: float
    f_eps_value: float
    cap_pressure: ScalarField
    surrogate_descent: tuple = ()
    complementarity_residual: float = 0.0
    sinkhorn_iterations: int = 0
    plan: TransportPlan | None = None


def _linear_potential(phi: ScalarField, params: EnergyParams) -> np.ndarray:
    """First-variation density V = (1/(2 sigma) - phi)/eps of the interaction."""
    c = params.chem
    return (1.0 / (2.0 * c.sigma) - phi.values) / c.epsilon


def _relax(old, new, omega):
    """Overrelaxed potential update; cells entering the support take ``new``."""
    with np.errstate(invalid="ignore"):
        blend = (1.0 - omega) * np.where(np.isfinite(old), old, new) + omega * new
        return np.where(np.isfinite(new), blend, _NEG_INF)


def _inner_solve(grid, logp, V, params: JKOParams, g0, omega0: float = 1.95):
    """Sinkhorn loop for the frozen-potential convex problem.

    The scaling updates are overrelaxed (SOR-style extrapolation of the log
    potentials): the slow mode of plain Sinkhorn at small lambda is a
    diffusive equilibration of the congestion multiplier across the saturated
    set, and heavy overrelaxation shortens it by more than an order of
    magnitude.  The factor drops once to a conservative value if the defect
    ever diverges.

    Returns (log_q, f, g, lf, defect, iterations).
    """
    lam = params.entropic_lambda
    kappa = lam / params.tau
    mu = params.energy.mu
    vol = grid.cell_volume
    p = np.where(np.isfinite(logp), np.exp(np.where(np.isfinite(logp), logp, 0.0)), 0.0)
    g = g0
    f = None
    defect = math.inf
    best = math.inf
    omega = omega0
    lf = None
    for it in range(1, params.sinkhorn_max_iter + 1):
        lg = log_gibbs_conv(grid, g, lam)
        if f is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                marg = np.where(np.isfinite(f), np.exp(f + lg), 0.0)
            defect = float(np.sum(np.abs(marg - p))) * vol
            if defect <= params.sinkhorn_tol:
                break
            if defect < best:
                best = defect
            elif not math.isfinite(defect) or defect > 100.0 * best:
                omega = 1.5
        with np.errstate(invalid="ignore"):
            f_new = np.where(np.isfinite(logp), logp - lg, _NEG_INF)
        f = f_new if f is None else _relax(f, f_new, omega)
        lf = log_gibbs_conv(grid, f, lam)
        with np.errstate(invalid="ignore"):
            log_q = np.minimum((kappa * lf - mu - V) / (kappa + mu), 0.0)
            log_q = np.where(log_q > _LOG_FLOOR, log_q, _NEG_INF)
            g_new = np.where(np.isfinite(log_q), log_q - lf, _NEG_INF)
        g = _relax(g, g_new, omega)
    else:
        raise SolverError(
            f"inner Sinkhorn exceeded {params.sinkhorn_max_iter} iterations",
            residual=defect,
        )
    # return the unrelaxed right potential so that exp(g + lf) equals the
    # proximal marginal exactly
    return log_q, f, g_new, lf, defect, it


def _surrogate_value(grid, logp, V, f, g, q, lam, tau, mu) -> float:
    """(1/2tau) * entropic cost + mu * entropy + int V q, up to a constant.

    Uses the dual value of the converged transport problem; the additive
    constants independent of q cancel in descent comparisons.
    """
    p = np.where(np.isfinite(logp), np.exp(np.where(np.isfinite(logp), logp, 0.0)), 0.0)
    vol = grid.cell_volume
    ot = 2.0 * _raw_dual_value(grid, p, q, f, g, lam)
    ent = float(np.sum(np.where(q > 0.0, q * np.log(np.maximum(q, 1e-300)), 0.0))) * vol
    lin = float(np.sum(V * q)) * vol
    return ot / (2.0 * tau) + mu * ent + lin


def jko_step(
    rho_prev: ScalarField,
    params: JKOParams,
    n: int = 0,
    warm_g: np.ndarray | None = None,
    with_recovery: bool = True,
) -> JKOState:
    """Advance one minimizing-movement step from rho_prev."""
    check_admissible(rho_prev, tol=max(1e-10, params.sinkhorn_tol))
    grid = rho_prev.grid
    eparams = params.energy
    chem = eparams.chem
    lam = params.entropic_lambda
    vol_omega = float(np.prod(grid.lengths))
    mass0 = integrate(rho_prev)

    if abs(mass0 - vol_omega) < 1e-12 * vol_omega:
        # the feasible set {rho <= 1} with this mass is the single point rho = 1
        rho_new = ScalarField.constant(grid, 1.0)
        return _finalize(
            n, rho_prev, rho_new, None, (), 0.0, 0, params, with_recovery
        )

    p = np.clip(rho_prev.values, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        logp = np.where(p > 0.0, np.log(np.maximum(p, 1e-300)), _NEG_INF)
    g = warm_g if warm_g is not None else np.where(np.isfinite(logp), 0.0, _NEG_INF)

    current = rho_prev
    descent_log = []
    total_inner = 0
    log_q = None
    f = None
    prev_plan_fg = None  # converged potentials for (p, current)
    for k in range(params.outer_fixed_point_iters):
        phi_bar = solve_phi(current, chem, check_input=False)
        V = _linear_potential(phi_bar, eparams)
        if prev_plan_fg is None:
            f_sym = _symmetric_potential(grid, p, lam, params.sinkhorn_tol, params.sinkhorn_max_iter)
            before = _surrogate_value(
                grid, logp, V, f_sym, f_sym, p, lam, params.tau, eparams.mu
            )
        else:
            before = _surrogate_value(
                grid, logp, V, prev_plan_fg[0], prev_plan_fg[1],
                current.values, lam, params.tau, eparams.mu,
            )
        log_q, f, g, lf, defect, iters = _inner_solve(grid, logp, V, params, g)
        total_inner += iters
        q_vals = np.exp(np.where(np.isfinite(log_q), log_q, _LOG_FLOOR))
        q_vals = np.where(np.isfinite(log_q), q_vals, 0.0)
        after = _surrogate_value(grid, logp, V, f, g, q_vals, lam, params.tau, eparams.mu)
        descent_log.append((before, after))
        current = ScalarField(grid, q_vals)
        prev_plan_fg = (f, g)

    # cap multiplier of the last inner solve, using its frozen potential V
    kappa = lam / params.tau
    with np.errstate(invalid="ignore"):
        cap = np.where(
            np.isfinite(lf), np.maximum(0.0, kappa * lf - eparams.mu - V), 0.0
        )

    mass1 = integrate(current)
    if abs(mass1 - mass0) > 10.0 * params.sinkhorn_tol * max(1.0, mass0):
        raise StepError(
            "mass drift beyond tolerance",
            diagnostics={"mass_before": mass0, "mass_after": mass1, "step": n},
        )
    if current.values.max() > 1.0 + params.sinkhorn_tol:
        raise StepError(
            "box constraint violated",
            diagnostics={"max_rho": float(current.values.max()), "step": n},
        )

    plan = _plan_from_potentials(rho_prev, current, f, g, lam, params)
    state = _finalize(
        n, rho_prev, current, plan, tuple(descent_log),
        plan.cost, total_inner, params, with_recovery,
        cap_pressure=ScalarField(grid, cap),
    )
    return state


def _plan_from_potentials(rho_prev, rho_new, f, g, lam, params) -> TransportPlan:
    """Package converged inner potentials with a debiased cost estimate."""
    grid = rho_prev.grid
    p = rho_prev.values
    q = rho_new.values
    raw = _raw_dual_value(grid, p, q, f, g, lam)
    fp = _symmetric_potential(grid, p, lam, params.sinkhorn_tol, params.sinkhorn_max_iter)
    fq = _symmetric_potential(grid, q, lam, params.sinkhorn_tol, params.sinkhorn_max_iter)
    debiased = max(
        0.0,
        2.0 * (raw - 0.5 * _raw_dual_value(grid, p, p, fp, fp, lam)
               - 0.5 * _raw_dual_value(grid, q, q, fq, fq, lam)),
    )
    return TransportPlan(
        source=rho_prev, target=rho_new, f=f, g=g, lam=lam,
        cost=debiased, raw_cost=float("nan"),
        marginal_defect=params.sinkhorn_tol, iterations=0,
    )


def _finalize(
    n, rho_prev, rho_new, plan, descent_log, w2_cost, inner_iters,
    params, with_recovery, cap_pressure=None,
) -> JKOState:
    grid = rho_new.grid
    eparams = params.energy
    phi = solve_phi(rho_new, eparams.chem, check_input=False)
    terms = energy_terms(rho_new, phi, eparams.chem)
    row = EnergyBreakdown(
        saturation=terms["saturation"],
        mismatch=terms["mismatch"],
        dirichlet=terms["dirichlet"],
        bdry_flux=terms["bdry_flux"],
        bdry_trace=terms["bdry_trace"],
        phase_bulk=terms["phase_bulk"],
        entropy=eparams.mu * entropy_integral(rho_new),
    )
    fe = row.entropy + terms["j_direct"]
    if plan is not None:
        v = barycentric_velocity(plan, params.tau)
    else:
        v = VectorField(grid, tuple(np.zeros(grid.shape) for _ in range(grid.dim)))
    comp_resid = 0.0
    if with_recovery:
        p_field, comp_resid = recover_pressure(rho_new, phi, v, eparams)
        q_field = modified_pressure(p_field, rho_new, phi, eparams)
    else:
        p_field = ScalarField.constant(grid, 0.0)
        q_field = ScalarField.constant(grid, 0.0)
    if cap_pressure is None:
        cap_pressure = ScalarField.constant(grid, 0.0)
    return JKOState(
        n=n, rho=rho_new, phi=phi, v=v, p=p_field, q=q_field,
        energy_row=row, w2_step_cost=w2_cost, f_eps_value=fe,
        cap_pressure=cap_pressure, surrogate_descent=descent_log,
        complementarity_residual=comp_resid, sinkhorn_iterations=inner_iters,
        plan=plan,
    )


def barycentric_velocity(
    plan: TransportPlan, tau: float, delta_supp: float = DELTA_SUPP
) -> VectorField:
    """v(x) = (x - T(x))/tau with T the barycentric projection of the plan.

    The sign convention follows the backward view of the step: mass at x in
    the new density arrived from T(x) in the previous one, so x - T(x) is the
    displacement actually travelled during the step.
    """
    grid = plan.source.grid
    T = barycentric_map(plan)
    X = grid.meshgrid()
    mask = plan.source.values > delta_supp
    comps = tuple(
        np.where(mask, (X[a] - T[a]) / tau, 0.0) for a in range(grid.dim)
    )
    return VectorField(grid, comps)


@lru_cache(maxsize=16)
def _neumann_laplacian(grid: GridSpec) -> sp.csr_matrix:
    """Sparse -Lap_h with homogeneous Neumann closure (singular, SPSD)."""
    n_total = grid.n_cells
    diag = np.zeros(grid.shape)
    rows, cols, vals = [], [], []
    idx = np.arange(n_total).reshape(grid.shape)
    for axis in range(grid.dim):
        w = 1.0 / grid.spacing[axis] ** 2
        i = np.moveaxis(idx, axis, 0)
        left, right = i[:-1].ravel(), i[1:].ravel()
        rows.extend([left, right])
        cols.extend([right, left])
        vals.extend([np.full(left.size, -w), np.full(left.size, -w)])
        diag += 2.0 * w
        d = np.moveaxis(diag, axis, 0)
        d[0] -= w
        d[-1] -= w
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_total, n_total),
    ).tocsr()


def recover_pressure(
    rho: ScalarField,
    phi: ScalarField,
    v: VectorField,
    params: EnergyParams,
    delta_sat: float = DELTA_SAT,
) -> tuple[ScalarField, float]:
    """Pressure from the momentum balance rho v = (1/eps) rho grad phi - grad p.

    Solves -Lap p = div(rho v - (1/eps) rho grad phi) with Neumann data and a
    zero-mean gauge, zeroes the unsaturated region, and returns the field
    together with the complementarity residual |p (1-rho)|_L1 measured before
    the clamp.
    """
    from .grid import divergence

    grid = rho.grid
    eps = params.chem.epsilon
    gphi = gradient(phi)
    flux = VectorField(
        grid,
        tuple(
            rho.values * v.components[a] - rho.values * gphi.components[a] / eps
            for a in range(grid.dim)
        ),
    )
    rhs = divergence(flux).values.ravel()
    rhs = rhs - rhs.mean()
    A = _neumann_laplacian(grid)
    x, info = spla.cg(A, rhs, rtol=1e-10, atol=1e-14, maxiter=10 * grid.n_cells)
    if info != 0:
        raise SolverError("pressure Poisson solve failed", residual=float(info))
    p = x.reshape(grid.shape)
    unsat = rho.values < 1.0 - delta_sat
    if np.any(unsat):
        p = p - p[unsat].mean()
    else:
        p = p - p.mean()
    resid = float(np.sum(np.abs(p * (1.0 - rho.values)))) * grid.cell_volume
    p = np.where(unsat, 0.0, p)
    return ScalarField(grid, p), resid


def modified_pressure(
    p: ScalarField, rho: ScalarField, phi: ScalarField, params: EnergyParams
) -> ScalarField:
    """Modified pressure q = p + (1/eps)(1/(2 sigma) - phi) rho.

    No gauge is applied: p vanishes off the saturated set and phi is
    determined, so q carries an absolute level whose interface trace is the
    surface-tension boundary value.
    """
    chem = params.chem
    base = (
        p.values
        + (1.0 / (2.0 * chem.sigma) - phi.values) / chem.epsilon * rho.values
    )
    return ScalarField(rho.grid, base)


def run_flow(
    rho_in: ScalarField,
    t_final: float,
    params: JKOParams,
    log_every: int = 1,
    with_recovery: bool = True,
    progress=None,
) -> tuple[list[JKOState], dict]:
    """March ceil(t_final / tau) steps and collect diagnostics.

    Returns the trajectory (state 0 is the initial datum) and a summary with
    the discrete energy inequality, the minimizing-movement estimate and the
    Holder-in-time constant.
    """
    n_steps = math.ceil(t_final / params.tau)
    state0 = _finalize(0, rho_in, rho_in, None, (), 0.0, 0, params, with_recovery)
    # Only logged states are retained (the last step always is); the plan is
    # dropped from retained states so long trajectories stay in memory.
    states = [dataclasses.replace(state0, plan=None)]
    rho_prev = state0.rho
    warm = None
    mass0 = integrate(rho_in)
    cum_cost = 0.0
    f0 = state0.f_eps_value
    bias_per_step = params.entropic_lambda * mass0 / params.tau
    energy_ok = True
    rho_last = rho_prev
    for n in range(1, n_steps + 1):
        try:
            st = jko_step(
                rho_prev, params, n=n, warm_g=warm, with_recovery=with_recovery
            )
        except (SolverError, StepError) as exc:
            raise StepError(
                f"step {n} failed: {exc}", diagnostics={"step": n}
            ) from exc
        warm = st.plan.g if st.plan is not None else None
        rho_prev = st.rho
        rho_last = st.rho
        cum_cost += st.w2_step_cost
        lhs = st.f_eps_value + cum_cost / (2.0 * params.tau)
        if lhs > f0 + n * bias_per_step:
            energy_ok = False
        if n % max(1, log_every) == 0 or n == n_steps:
            states.append(dataclasses.replace(st, plan=None))
            if progress is not None:
                progress(st)
    mm_bound = 2.0 * params.tau * max(f0, 0.0) + n_steps * params.tau * bias_per_step
    summary = {
        "steps": n_steps,
        "mass_initial": mass0,
        "mass_final": integrate(rho_last),
        "mass_drift": abs(integrate(rho_last) - mass0),
        "cumulative_w2_sq": cum_cost,
        "f_eps_initial": f0,
        "f_eps_final": states[-1].f_eps_value,
        "bias_per_step": bias_per_step,
        "energy_inequality_ok": energy_ok,
        "minimizing_movement_ok": cum_cost <= mm_bound + 1e-12,
        "holder_constant": math.sqrt(max(2.0 * f0, 0.0) + bias_per_step),
    }
    return states, summary
