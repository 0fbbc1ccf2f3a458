import numpy as np
import pytest

from congestflow import analysis
from congestflow.chem import ChemParams, solve_phi
from congestflow.errors import DomainError
from congestflow.grid import GridSpec, RobinSpec, ScalarField
from congestflow.shapes import disc, half_disc_on_wall, half_square, random_admissible

FNS = (
    lambda x, y: np.cos(np.pi * y) + 0.3 * x,
    lambda x, y: np.sin(np.pi * x) * y + 0.2,
)


@pytest.fixture
def fine_grid():
    return GridSpec((128, 128), (1.0, 1.0))


@pytest.fixture
def fine_disc(fine_grid):
    return disc(fine_grid, (0.5, 0.5), 0.25)


class TestExtraction:
    def test_disc_has_one_closed_component(self, fine_disc):
        curve = analysis.extract_interface(fine_disc)
        assert len(curve.components) == 1
        assert curve.components[0].closed

    def test_disc_perimeter_within_two_percent(self, fine_disc):
        curve = analysis.extract_interface(fine_disc)
        assert curve.total_length == pytest.approx(2 * np.pi * 0.25, rel=0.02)

    def test_vertex_spacing_bounds(self, fine_disc):
        h = 1.0 / 128
        comp = analysis.extract_interface(fine_disc).components[0]
        v = np.vstack([comp.vertices, comp.vertices[:1]])
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        assert seg.min() >= h / 4 - 1e-12
        assert seg.max() <= 4 * h

    def test_closed_curve_turns_by_two_pi(self, fine_disc):
        comp = analysis.extract_interface(fine_disc).components[0]
        v = comp.vertices
        e = np.diff(np.vstack([v, v[:2]]), axis=0)
        angles = np.arctan2(e[:, 1], e[:, 0])
        turning = np.diff(angles)
        turning = (turning + np.pi) % (2 * np.pi) - np.pi
        assert abs(abs(turning.sum()) - 2 * np.pi) <= 1e-2

    def test_components_ordered_by_length(self, fine_grid):
        big = disc(fine_grid, (0.35, 0.5), 0.2).values
        small = disc(fine_grid, (0.78, 0.5), 0.08).values
        rho = ScalarField(fine_grid, big + small)
        curve = analysis.extract_interface(rho)
        assert len(curve.components) == 2
        assert curve.components[0].arclength > curve.components[1].arclength

    def test_open_component_reaches_wall(self, fine_grid):
        rho = half_disc_on_wall(fine_grid, 0.5, 0.25)
        comp = analysis.extract_interface(rho).components[0]
        assert not comp.closed
        assert comp.vertices[0][1] == pytest.approx(0.0, abs=1e-9) or \
            comp.vertices[-1][1] == pytest.approx(0.0, abs=1e-9)

    def test_requires_2d(self):
        g = GridSpec((64,), (1.0,))
        with pytest.raises(DomainError):
            analysis.extract_interface(ScalarField.constant(g, 0.5))


class TestCurvature:
    def test_disc_curvature_mean(self, fine_disc):
        comp = analysis.extract_interface(fine_disc).components[0]
        assert np.mean(comp.kappa) == pytest.approx(4.0, rel=0.05)

    def test_convex_region_has_positive_curvature(self, fine_disc):
        comp = analysis.extract_interface(fine_disc).components[0]
        assert np.mean(comp.kappa) > 0

    def test_hole_has_negative_curvature(self, fine_grid):
        full = np.ones(fine_grid.shape)
        hole = disc(fine_grid, (0.5, 0.5), 0.25).values
        rho = ScalarField(fine_grid, full - hole)
        comp = analysis.extract_interface(rho).components[0]
        assert np.mean(comp.kappa) == pytest.approx(-4.0, rel=0.05)

    def test_straight_interface_is_flat(self, fine_grid):
        X, _ = fine_grid.meshgrid()
        rho = ScalarField(fine_grid, (X < 0.3).astype(float))
        comp = analysis.extract_interface(rho).components[0]
        assert np.max(np.abs(comp.kappa)) <= 1e-6

    def test_normals_point_outward(self, fine_disc):
        comp = analysis.extract_interface(fine_disc).components[0]
        radial = comp.vertices - np.array([0.5, 0.5])
        radial /= np.linalg.norm(radial, axis=1)[:, None]
        dots = np.einsum("ka,ka->k", radial, comp.normals)
        assert np.min(dots) > 0.9


class TestContacts:
    def test_half_disc_orthogonal_contact(self, fine_grid):
        rho = half_disc_on_wall(fine_grid, 0.5, 0.25)
        curve = analysis.extract_interface(rho)
        contacts = analysis.contact_angle(curve, rho)
        assert len(contacts) == 2
        for c in contacts:
            assert c.theta == pytest.approx(np.pi / 2, abs=0.15)

    def test_closed_curves_have_no_contacts(self, fine_disc):
        curve = analysis.extract_interface(fine_disc)
        assert analysis.contact_angle(curve, fine_disc) == ()

    def test_wall_contact_length(self, fine_grid):
        rho = half_disc_on_wall(fine_grid, 0.5, 0.25)
        assert analysis.wall_contact_length(rho) == pytest.approx(0.5, abs=2 / 128)

    def test_half_square_wets_three_walls(self, fine_grid):
        rho = half_square(fine_grid)
        assert analysis.wall_contact_length(rho) == pytest.approx(2.0, abs=4 / 128)


class TestGeometryMetrics:
    def test_disc_metrics(self, fine_disc):
        m = analysis.geometry_metrics(analysis.extract_interface(fine_disc))
        assert m["area"] == pytest.approx(np.pi * 0.25**2, rel=0.01)
        assert m["isoperimetric_ratio"] == pytest.approx(1.0, abs=0.05)

    def test_ellipse_ratio_below_one(self, fine_grid):
        from congestflow.shapes import ellipse

        rho = ellipse(fine_grid, (0.5, 0.5), (0.3, 0.15))
        m = analysis.geometry_metrics(analysis.extract_interface(rho))
        assert m["isoperimetric_ratio"] < 0.95

    def test_half_disc_area_closed_along_wall(self, fine_grid):
        rho = half_disc_on_wall(fine_grid, 0.5, 0.25)
        m = analysis.geometry_metrics(analysis.extract_interface(rho))
        assert m["area"] == pytest.approx(0.5 * np.pi * 0.25**2, rel=0.02)


class TestBilinearSample:
    def test_exact_on_linear_data(self):
        g = GridSpec((32, 32), (1.0, 1.0))
        f = ScalarField.from_function(g, lambda x, y: 2 * x + 3 * y)
        pts = np.array([[0.4, 0.6], [0.25, 0.25], [0.5, 0.9]])
        assert np.allclose(analysis.bilinear_sample(f, pts), 2 * pts[:, 0] + 3 * pts[:, 1])

    def test_clamped_at_boundary(self):
        g = GridSpec((16, 16), (1.0, 1.0))
        f = ScalarField.constant(g, 7.0)
        assert analysis.bilinear_sample(f, np.array([[0.0, 0.0]]))[0] == 7.0


class TestFirstVariationIdentity:
    def test_neumann_residual_small(self, fine_grid):
        rho = random_admissible(fine_grid, 7)
        xi = analysis.TestVectorField(fine_grid, FNS).as_vector_field()
        chem = ChemParams(epsilon=0.05, sigma=1.0, robin=RobinSpec(0.0, 1.0))
        assert analysis.firstvar_identity_check(rho, xi, chem)["residual"] <= 0.02

    def test_robin_residual_small(self, fine_grid):
        rho = random_admissible(fine_grid, 7)
        xi = analysis.TestVectorField(fine_grid, FNS).as_vector_field()
        chem = ChemParams(epsilon=0.05, sigma=1.0, robin=RobinSpec(1.0, 1.0))
        assert analysis.firstvar_identity_check(rho, xi, chem)["residual"] <= 0.03

    def test_sigma_rescaling_path(self, fine_grid):
        rho = random_admissible(fine_grid, 7)
        xi = analysis.TestVectorField(fine_grid, FNS).as_vector_field()
        chem = ChemParams(epsilon=0.05, sigma=2.0, robin=RobinSpec(0.0, 1.0))
        assert analysis.firstvar_identity_check(rho, xi, chem)["residual"] <= 0.02

    def test_residual_decreases_under_refinement(self):
        residuals = []
        for n in (32, 64, 128):
            g = GridSpec((n, n), (1.0, 1.0))
            rho = random_admissible(g, 7)
            xi = analysis.TestVectorField(g, FNS).as_vector_field()
            chem = ChemParams(epsilon=0.05, sigma=1.0, robin=RobinSpec(0.0, 1.0))
            residuals.append(analysis.firstvar_identity_check(rho, xi, chem)["residual"])
        assert residuals[2] < residuals[1] < residuals[0]


class TestFirstVariationLimit:
    def test_disc_sweep_converges(self):
        gaps = []
        rhs = None
        for eps in (0.04, 0.02):
            n = round(4.0 / eps)
            g = GridSpec((n, n), (1.0, 1.0))
            rho = disc(g, (0.5, 0.5), 0.25)
            chem = ChemParams(epsilon=eps, sigma=1.0, robin=RobinSpec(0.0, 1.0))
            phi = solve_phi(rho, chem)
            xi = analysis.TestVectorField(g, FNS)
            lhs = analysis.first_variation_lhs(rho, phi, xi.as_vector_field(), chem)
            curve = analysis.extract_interface(rho)
            rhs = analysis.first_variation_limit_rhs(curve, xi, rho, chem)
            gaps.append(abs(lhs - rhs))
        assert gaps[1] < gaps[0]
        assert gaps[1] / abs(rhs) <= 0.10

    def test_curvature_flux_cross_check(self):
        g = GridSpec((200, 200), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.25)
        chem = ChemParams(epsilon=0.02, sigma=1.0, robin=RobinSpec(0.0, 1.0))
        xi = analysis.TestVectorField(g, FNS)
        curve = analysis.extract_interface(rho)
        rhs = analysis.first_variation_limit_rhs(curve, xi, rho, chem)
        flux = analysis.curvature_flux(curve, xi) / 4.0
        assert flux == pytest.approx(rhs, rel=0.02)


class TestSurfaceTension:
    def test_reference_values_scale_with_curvature(self, fine_disc):
        curve = analysis.extract_interface(fine_disc)
        q = ScalarField.from_function(fine_disc.grid, lambda x, y: 1.0 + 0 * x)
        res = analysis.surface_tension_check(q, curve, sigma=1.0)
        assert np.mean(res["reference"][0]) == pytest.approx(1.0, rel=0.05)
        assert res["mean_q_total"] == pytest.approx(1.0, abs=1e-12)

    def test_sigma_dependence_of_reference(self, fine_disc):
        curve = analysis.extract_interface(fine_disc)
        q = ScalarField.constant(fine_disc.grid, 0.0)
        r1 = analysis.surface_tension_check(q, curve, sigma=1.0)
        r2 = analysis.surface_tension_check(q, curve, sigma=2.0)
        ratio = np.mean(r2["reference"][0]) / np.mean(r1["reference"][0])
        assert ratio == pytest.approx(2.0 ** (-1.5), rel=1e-9)


class TestLevelCurveGap:
    def test_resolved_interface_has_small_gap(self):
        g = GridSpec((128, 128), (1.0, 1.0))
        rho = disc(g, (0.5, 0.5), 0.25)
        chem = ChemParams(epsilon=0.1, sigma=1.0, robin=RobinSpec(0.0, 1.0))
        phi = solve_phi(rho, chem)
        gap = analysis.level_curve_gap(rho, phi, sigma=1.0)
        assert gap <= 0.04
