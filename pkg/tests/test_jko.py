import numpy as np
import pytest

from congestflow.chem import ChemParams, solve_phi
from congestflow.energy import EnergyParams
from congestflow.errors import DomainError, ParameterError
from congestflow.grid import GridSpec, RobinSpec, ScalarField, integrate
from congestflow.jko import (
    JKOParams,
    jko_step,
    modified_pressure,
    recover_pressure,
    run_flow,
)
from congestflow.shapes import disc, interval


def make_params(grid, eps=0.1, sigma=1.0, robin=None, mu=1e-4, tau=5e-4, **kw):
    chem = ChemParams(epsilon=eps, sigma=sigma, robin=robin or RobinSpec(0.0, 1.0))
    energy = EnergyParams(chem=chem, mu=mu)
    lam = kw.pop("entropic_lambda", 2 * max(grid.spacing) ** 2)
    return JKOParams(tau=tau, entropic_lambda=lam, energy=energy, **kw)


class TestParams:
    def test_validation(self, grid1d):
        chem = ChemParams(epsilon=0.1, sigma=1.0, robin=RobinSpec(0.0, 1.0))
        energy = EnergyParams(chem=chem)
        with pytest.raises(ParameterError):
            JKOParams(tau=0.0, entropic_lambda=1e-4, energy=energy)
        with pytest.raises(ParameterError):
            JKOParams(tau=1e-3, entropic_lambda=0.0, energy=energy)
        with pytest.raises(ParameterError):
            JKOParams(tau=1e-3, entropic_lambda=1e-4, energy=None)
        with pytest.raises(ParameterError):
            JKOParams(
                tau=1e-3, entropic_lambda=1e-4, energy=energy,
                outer_fixed_point_iters=0,
            )


class TestSingleStep1D:
    def test_mass_and_box_preserved(self, grid1d):
        rho = interval(grid1d, 0.3, 0.7)
        params = make_params(grid1d)
        state = jko_step(rho, params, n=1)
        assert integrate(state.rho) == pytest.approx(integrate(rho), abs=1e-8)
        assert state.rho.values.max() <= 1.0 + params.sinkhorn_tol
        assert state.rho.values.min() >= 0.0

    def test_saturated_interval_stays_sharp(self, grid1d):
        rho = interval(grid1d, 0.3, 0.7)
        params = make_params(grid1d)
        state = jko_step(rho, params, n=1)
        mid = state.rho.values[(grid1d.axis_centers(0) > 0.4) & (grid1d.axis_centers(0) < 0.6)]
        assert mid.min() > 0.99

    def test_surrogate_descent_monotone(self, grid1d):
        rho = interval(grid1d, 0.25, 0.75)
        params = make_params(grid1d)
        state = jko_step(rho, params, n=1)
        for before, after in state.surrogate_descent:
            assert after <= before + 1e-9

    def test_inadmissible_input_rejected(self, grid1d):
        rho = ScalarField.constant(grid1d, 1.5)
        with pytest.raises(DomainError):
            jko_step(rho, make_params(grid1d), n=1)

    def test_fully_saturated_domain_is_fixed_point(self, grid1d):
        rho = ScalarField.constant(grid1d, 1.0)
        state = jko_step(rho, make_params(grid1d), n=1)
        assert np.allclose(state.rho.values, 1.0, atol=1e-12)


class TestSingleStep2D:
    def test_disc_step_keeps_invariants(self):
        g = GridSpec((48, 48), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.22)
        params = make_params(g, eps=0.1)
        state = jko_step(rho, params, n=1)
        assert integrate(state.rho) == pytest.approx(integrate(rho), abs=1e-8)
        assert state.rho.values.max() <= 1.0 + params.sinkhorn_tol
        assert state.w2_step_cost >= 0.0

    def test_cap_pressure_supported_on_saturated_set(self):
        g = GridSpec((48, 48), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.22)
        state = jko_step(rho, make_params(g, eps=0.1), n=1)
        cap = state.cap_pressure.values
        unsat = state.rho.values < 0.9
        # Where the density is clearly below the cap, the multiplier vanishes.
        assert np.max(np.abs(cap[unsat])) <= 1e-8


class TestFlow:
    def test_run_flow_summary(self):
        g = GridSpec((48, 48), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.22)
        params = make_params(g, eps=0.1)
        states, summary = run_flow(rho, 3 * params.tau, params, with_recovery=False)
        assert summary["steps"] == 3
        assert len(states) == 4  # initial state plus three steps
        assert abs(summary["mass_drift"]) <= 3 * params.sinkhorn_tol
        assert summary["energy_inequality_ok"]
        assert summary["cumulative_w2_sq"] >= 0.0

    def test_energy_descends_within_bias(self):
        g = GridSpec((48, 48), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.22)
        params = make_params(g, eps=0.1)
        states, summary = run_flow(rho, 5 * params.tau, params, with_recovery=False)
        budget = summary["bias_per_step"]
        f = [st.f_eps_value for st in states]
        for a, b in zip(f, f[1:]):
            assert b <= a + budget + 1e-12

    def test_log_every_thins_trajectory(self):
        g = GridSpec((32, 32), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.2)
        params = make_params(g, eps=0.15)
        states, summary = run_flow(rho, 4 * params.tau, params, log_every=2,
                                   with_recovery=False)
        assert [st.n for st in states] == [0, 2, 4]
        assert summary["steps"] == 4


class TestPressureRecovery:
    def test_pressure_vanishes_off_saturation(self):
        g = GridSpec((48, 48), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.22)
        params = make_params(g, eps=0.1)
        state = jko_step(rho, params, n=1, with_recovery=True)
        p = state.p.values
        unsat = state.rho.values < 0.999
        assert np.max(np.abs(p[unsat])) == 0.0

    def test_modified_pressure_vanishes_off_support(self):
        g = GridSpec((48, 48), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.22)
        params = make_params(g, eps=0.1)
        state = jko_step(rho, params, n=1, with_recovery=True)
        empty = state.rho.values < 1e-12
        assert np.allclose(state.q.values[empty], 0.0)

    def test_recover_pressure_gauge(self):
        g = GridSpec((48, 48), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.22)
        chem = ChemParams(epsilon=0.1, sigma=1.0, robin=RobinSpec(0.0, 1.0))
        eparams = EnergyParams(chem=chem, mu=1e-4)
        phi = solve_phi(rho, chem)
        from congestflow.grid import VectorField

        v = VectorField(g, (np.zeros(g.shape), np.zeros(g.shape)))
        p, resid = recover_pressure(rho, phi, v, eparams)
        unsat = rho.values < 0.5
        assert np.allclose(p.values[unsat], 0.0)
        q = modified_pressure(p, rho, phi, eparams)
        chem_part = (1.0 / (2.0 * chem.sigma) - phi.values) / chem.epsilon * rho.values
        assert np.allclose(q.values, p.values + chem_part)
