import numpy as np
import pytest

from congestflow.chem import (
    ChemParams,
    check_admissible,
    ghost_coefficient,
    phi_energy_bound_check,
    solve_phi,
)
from congestflow.errors import DomainError, ParameterError
from congestflow.grid import GridSpec, RobinSpec, ScalarField, integrate

from conftest import ROBIN_CASES


def analytic_dirichlet_1d(eps):
    """phi for rho = 1, sigma = 1, phi(0) = phi(1) = 0 on the unit interval."""

    def phi(x):
        return 1.0 - np.cosh((x - 0.5) / eps) / np.cosh(0.5 / eps)

    return phi


class TestParams:
    def test_rejects_bad_epsilon_sigma(self):
        with pytest.raises(ParameterError):
            ChemParams(epsilon=0.0, sigma=1.0, robin=RobinSpec(0.0, 1.0))
        with pytest.raises(ParameterError):
            ChemParams(epsilon=0.1, sigma=-1.0, robin=RobinSpec(0.0, 1.0))

    def test_ghost_coefficient_limits(self):
        # Pure Neumann: mirror ghost, c = 1; pure Dirichlet: antimirror-ish.
        assert ghost_coefficient(0.0, 1.0, 0.1, 0.01) == pytest.approx(1.0)
        c = ghost_coefficient(1.0, 0.0, 0.1, 0.01)
        assert c == pytest.approx(-1.0)


class TestAdmissibility:
    def test_accepts_indicator(self, grid1d):
        rho = ScalarField.constant(grid1d, 1.0)
        check_admissible(rho)

    def test_rejects_negative_and_overfull(self, grid1d):
        vals = np.zeros(grid1d.shape)
        vals[0] = -1e-3
        with pytest.raises(DomainError):
            check_admissible(ScalarField(grid1d, vals))
        with pytest.raises(DomainError):
            check_admissible(ScalarField.constant(grid1d, 1.0 + 1e-3))

    def test_tolerates_tiny_overshoot(self, grid1d):
        check_admissible(ScalarField.constant(grid1d, 1.0 + 1e-12))


class TestDirichlet1D:
    def test_matches_analytic_solution(self):
        eps = 0.1
        g = GridSpec((256,), (1.0,))
        rho = ScalarField.constant(g, 1.0)
        params = ChemParams(epsilon=eps, sigma=1.0, robin=RobinSpec(1.0, 0.0))
        phi = solve_phi(rho, params)
        exact = analytic_dirichlet_1d(eps)(g.axis_centers(0))
        assert np.max(np.abs(phi.values - exact)) <= 1e-3

    def test_error_decreases_under_refinement(self):
        eps = 0.1
        errs = []
        for n in (64, 128, 256):
            g = GridSpec((n,), (1.0,))
            rho = ScalarField.constant(g, 1.0)
            params = ChemParams(epsilon=eps, sigma=1.0, robin=RobinSpec(1.0, 0.0))
            phi = solve_phi(rho, params)
            exact = analytic_dirichlet_1d(eps)(g.axis_centers(0))
            errs.append(np.max(np.abs(phi.values - exact)))
        assert errs[2] < errs[1] < errs[0]
        assert errs[2] < errs[0] / 8.0  # second order


class TestMaxPrinciple:
    @pytest.mark.parametrize("robin", ROBIN_CASES, ids=["neumann", "dirichlet", "robin"])
    def test_random_densities_stay_in_band(self, robin):
        rng = np.random.default_rng(11)
        g = GridSpec((32, 32), (1.0, 1.0))
        for sigma in (0.5, 1.0, 2.0):
            params = ChemParams(epsilon=0.15, sigma=sigma, robin=robin)
            for _ in range(10):
                rho = ScalarField(g, rng.uniform(0.0, 1.0, size=g.shape))
                phi = solve_phi(rho, params)
                assert phi.values.min() >= -1e-10
                assert phi.values.max() <= 1.0 / sigma + 1e-10

    def test_neumann_constant_density_gives_exact_plateau(self):
        g = GridSpec((32, 32), (1.0, 1.0))
        params = ChemParams(epsilon=0.1, sigma=2.0, robin=RobinSpec(0.0, 1.0))
        phi = solve_phi(ScalarField.constant(g, 1.0), params)
        assert np.allclose(phi.values, 0.5, atol=1e-12)

    def test_zero_density_gives_zero(self, grid2d):
        params = ChemParams(epsilon=0.1, sigma=1.0, robin=RobinSpec(1.0, 1.0))
        phi = solve_phi(ScalarField.constant(grid2d, 0.0), params)
        assert np.allclose(phi.values, 0.0)


class TestEnergyBound:
    @pytest.mark.parametrize("robin", ROBIN_CASES, ids=["neumann", "dirichlet", "robin"])
    def test_bound_holds(self, robin, disc_rho):
        params = ChemParams(epsilon=0.1, sigma=1.0, robin=robin)
        phi = solve_phi(disc_rho, params)
        result = phi_energy_bound_check(disc_rho, phi, params)
        assert result["passed"]
        assert result["lhs"] <= result["rhs"] + 1e-12

    def test_mass_conservation_neumann(self, disc_rho):
        # Integrating the equation with no-flux walls: sigma int phi = mass.
        params = ChemParams(epsilon=0.1, sigma=2.0, robin=RobinSpec(0.0, 1.0))
        phi = solve_phi(disc_rho, params)
        assert 2.0 * integrate(phi) == pytest.approx(integrate(disc_rho), rel=1e-8)
