"""Free energy of the congestion-constrained chemotaxis model.

The interaction part,

    J = (1 / 2*sigma*eps) * int rho * (1 - sigma*phi),

with phi solving  sigma*phi - eps^2*Lap(phi) = rho  under the Robin condition,
admits two rewritings obtained by substituting the equation and integrating by
parts once:

    J = (1/2se) int rho(1-rho)                 [saturation]
      + (1/2se) int (rho - sigma*phi)^2        [mismatch]
      + (eps/2) int |grad phi|^2               [dirichlet]
      + (1/2)   bint a/(a+b) phi^2             [bdry_trace]
      + (1/2)   bint b/(a+b) |eps dphi/dn|^2   [bdry_flux]

and a phase-field variant replacing the two bulk terms by

    (1/2se) int [(1-rho)(sigma*phi)^2 + rho(1-sigma*phi)^2],

which agrees with them pointwise.  The quadratures below are chosen so the
identities hold at the discrete level to rounding error (given a converged
phi): the dirichlet term uses the staggered face gradients of the five-point
Laplacian plus a half-cell strip of the squared normal derivative along the
boundary, and the traces use the same ghost-cell closure as the solver.

The full free energy is F = mu * int rho log rho + J.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chem import ChemParams, ghost_coefficient
from .errors import DomainError, ParameterError
from .grid import ScalarField, gradient

__all__ = [
    "EnergyParams",
    "EnergyBreakdown",
    "energy_terms",
    "j_eps_direct",
    "j_eps_symmetric",
    "j_eps_phase",
    "f_eps",
    "entropy_integral",
    "j0_limit",
    "F_profile",
    "f_profile",
    "perimeter_estimate_via_phi",
    "boundary_weight",
]

_CONSTRAINT_TOL = 1e-10


@dataclass(frozen=True)
class EnergyParams:
    """Chemical parameters plus the cell diffusivity mu."""

    chem: ChemParams
    mu: float = 0.0

    def __post_init__(self):
        if self.mu < 0:
            raise ParameterError("mu must be nonnegative")


@dataclass(frozen=True)
class EnergyBreakdown:
    """Term-by-term interaction energy plus the weighted entropy.

    All terms except ``entropy`` are nonnegative for admissible densities.
    """

    saturation: float
    mismatch: float
    dirichlet: float
    bdry_flux: float
    bdry_trace: float
    phase_bulk: float
    entropy: float

    @property
    def boundary(self) -> float:
        return self.dirichlet + self.bdry_trace + self.bdry_flux

    @property
    def total_symmetric(self) -> float:
        return self.saturation + self.mismatch + self.boundary

    @property
    def total_phase(self) -> float:
        return self.phase_bulk + self.boundary


def _admissible(rho: ScalarField) -> bool:
    v = rho.values
    return v.min() >= -_CONSTRAINT_TOL and v.max() <= 1.0 + _CONSTRAINT_TOL


def _boundary_face_data(phi: ScalarField, params: ChemParams):
    """Yield (phi_face, eps*dphi/dn, face_measure, h) per boundary group."""
    grid = phi.grid
    alpha, beta = params.robin.alpha, params.robin.beta
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        c = ghost_coefficient(alpha, beta, params.epsilon, h)
        face_measure = grid.cell_volume / h
        v = np.moveaxis(phi.values, axis, 0)
        for phi_b in (v[0], v[-1]):
            phi_face = 0.5 * (1.0 + c) * phi_b
            flux = params.epsilon * (c - 1.0) / h * phi_b
            yield phi_face, flux, face_measure, h


def _dirichlet_term(phi: ScalarField, params: ChemParams) -> float:
    """(eps/2) * discrete Dirichlet energy matching the solver's Laplacian.

    Interior faces carry the staggered difference quotient; each boundary face
    adds a half-cell strip (h/2)*(dphi/dn)^2 so the sum reproduces the
    quadratic form -<phi, Lap_h phi> exactly.
    """
    grid = phi.grid
    total = 0.0
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        v = np.moveaxis(phi.values, axis, 0)
        d = (v[1:] - v[:-1]) / h
        total += float(np.sum(d * d)) * grid.cell_volume
    for _, flux, face_measure, h in _boundary_face_data(phi, params):
        total += 0.5 * h * float(np.sum((flux / params.epsilon) ** 2)) * face_measure
    return 0.5 * params.epsilon * total


def energy_terms(rho: ScalarField, phi: ScalarField, params: ChemParams) -> dict:
    """All bulk and boundary contributions plus the three totals."""
    s, eps = params.sigma, params.epsilon
    alpha, beta = params.robin.alpha, params.robin.beta
    w = 1.0 / (2.0 * s * eps)
    vol = rho.grid.cell_volume
    r = rho.values
    sp = s * phi.values

    j_direct = w * float(np.sum(r * (1.0 - sp))) * vol
    saturation = w * float(np.sum(r * (1.0 - r))) * vol
    mismatch = w * float(np.sum((r - sp) ** 2)) * vol
    phase_bulk = w * float(np.sum((1.0 - r) * sp**2 + r * (1.0 - sp) ** 2)) * vol
    dirichlet = _dirichlet_term(phi, params)

    bdry_trace = 0.0
    bdry_flux = 0.0
    for phi_face, flux, face_measure, _ in _boundary_face_data(phi, params):
        bdry_trace += (
            0.5 * alpha / (alpha + beta) * float(np.sum(phi_face**2)) * face_measure
        )
        bdry_flux += (
            0.5 * beta / (alpha + beta) * float(np.sum(flux**2)) * face_measure
        )

    boundary = dirichlet + bdry_trace + bdry_flux
    return {
        "saturation": saturation,
        "mismatch": mismatch,
        "dirichlet": dirichlet,
        "bdry_trace": bdry_trace,
        "bdry_flux": bdry_flux,
        "phase_bulk": phase_bulk,
        "j_direct": j_direct,
        "j_symmetric": saturation + mismatch + boundary,
        "j_phase": phase_bulk + boundary,
    }


def j_eps_direct(rho: ScalarField, phi: ScalarField, params: ChemParams) -> float:
    """J in the direct form; +inf sentinel outside the box constraint."""
    if not _admissible(rho):
        return float("inf")
    return energy_terms(rho, phi, params)["j_direct"]


def j_eps_symmetric(
    rho: ScalarField, phi: ScalarField, params: ChemParams, mu: float = 0.0
) -> tuple[EnergyBreakdown, float]:
    """Term-by-term breakdown and the symmetric-form total."""
    if not _admissible(rho):
        return (
            EnergyBreakdown(*([float("inf")] * 6), entropy=0.0),
            float("inf"),
        )
    t = energy_terms(rho, phi, params)
    br = EnergyBreakdown(
        saturation=t["saturation"],
        mismatch=t["mismatch"],
        dirichlet=t["dirichlet"],
        bdry_flux=t["bdry_flux"],
        bdry_trace=t["bdry_trace"],
        phase_bulk=t["phase_bulk"],
        entropy=mu * entropy_integral(rho),
    )
    return br, t["j_symmetric"]


def j_eps_phase(rho: ScalarField, phi: ScalarField, params: ChemParams) -> float:
    """J in the phase-field form."""
    if not _admissible(rho):
        return float("inf")
    return energy_terms(rho, phi, params)["j_phase"]


def entropy_integral(rho: ScalarField) -> float:
    """int rho log rho with the convention 0 log 0 = 0."""
    r = rho.values
    e = np.where(r > 0.0, r * np.log(np.maximum(r, 1e-300)), 0.0)
    return float(np.sum(e)) * rho.grid.cell_volume


def f_eps(rho: ScalarField, phi: ScalarField, params: EnergyParams) -> float:
    """F = mu * int rho log rho + J (direct form)."""
    j = j_eps_direct(rho, phi, params.chem)
    if not np.isfinite(j):
        return j
    return params.mu * entropy_integral(rho) + j


def boundary_weight(params: ChemParams) -> float:
    """Wall weight min(1, 2a/(a + sqrt(sigma) b)) of the sharp-interface limit."""
    alpha, beta = params.robin.alpha, params.robin.beta
    if beta == 0.0:
        return 1.0
    return min(1.0, 2.0 * alpha / (alpha + np.sqrt(params.sigma) * beta))


def j0_limit(rho: ScalarField, params: ChemParams) -> float:
    """Sharp-interface limit (1/4 s^{3/2})[Per(E) + w * |bd E on walls|].

    The interior perimeter is measured on the extracted interface polyline;
    the wall term is the boundary length of {rho=1} weighted by the Robin
    wetting coefficient.  Requires an indicator field.
    """
    v = rho.values
    if not np.all((np.abs(v) < 1e-12) | (np.abs(v - 1.0) < 1e-12)):
        raise DomainError("j0_limit requires a {0,1} indicator field")
    from .analysis import interface_perimeter, wall_contact_length

    per = interface_perimeter(rho)
    wall = wall_contact_length(rho)
    return (per + boundary_weight(params) * wall) / (4.0 * params.sigma**1.5)


def F_profile(t):
    """F(t) = int_0^t 2 min(s, 1-s) ds: t^2 below 1/2, 2t - t^2 - 1/2 above."""
    t = np.asarray(t, dtype=float)
    return np.where(t <= 0.5, t * t, 2.0 * t - t * t - 0.5)


def f_profile(t):
    """Density F'(t) = 2 min(t, 1-t)."""
    t = np.asarray(t, dtype=float)
    return 2.0 * np.minimum(t, 1.0 - t)


def perimeter_estimate_via_phi(phi: ScalarField, sigma: float) -> float:
    """Total-variation lower bound (1/2 sigma^{3/2}) int |grad F(sigma*phi)|."""
    comp = ScalarField(
        phi.grid, F_profile(np.clip(sigma * phi.values, 0.0, 1.0))
    )
    g = gradient(comp)
    mag = np.sqrt(sum(c * c for c in g.components))
    return float(np.sum(mag)) * phi.grid.cell_volume / (2.0 * sigma**1.5)
