"""Interface geometry and sharp-interface consistency diagnostics.

The saturated region of a density field is described by its level-1/2 set,
extracted as a polyline with :func:`extract_interface`.  On top of that curve
this module provides signed curvature, wall contact angles, isoperimetric
metrics, and the quadratures comparing the diffuse first variation of the
chemical energy against its sharp-interface (mean curvature + wetting) limit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from skimage import measure

from .chem import ChemParams, solve_phi
from .energy import boundary_weight
from .errors import DomainError, ParameterError
from .grid import (
    GridSpec,
    ScalarField,
    VectorField,
    boundary_faces,
    face_trace,
    gradient,
    inner,
    integrate,
)

__all__ = [
    "CurveComponent",
    "Contact",
    "InterfaceCurve",
    "TestVectorField",
    "bilinear_sample",
    "extract_interface",
    "contact_angle",
    "interface_perimeter",
    "wall_contact_length",
    "geometry_metrics",
    "first_variation_lhs",
    "first_variation_limit_rhs",
    "curvature_flux",
    "firstvar_identity_check",
    "surface_tension_check",
    "level_curve_gap",
]

#: Fraction of a cell below which adjacent polyline vertices are merged.
_MERGE_FRACTION = 0.25
#: Half-width of the curvature moving-average window.
_KAPPA_SMOOTH = 4
#: Number of end vertices used for the least-squares contact tangent.
_TANGENT_POINTS = 5


# ---------------------------------------------------------------------------
# curve data types


@dataclass(frozen=True)
class CurveComponent:
    """One connected piece of a level set: an open or closed polyline.

    ``vertices`` has shape (n, 2) in physical coordinates.  For closed
    components the first vertex is *not* repeated at the end.  ``kappa`` holds
    the signed curvature per vertex, positive where the enclosed (saturated)
    region is convex.  ``normals`` are unit normals per vertex pointing out of
    the saturated region.
    """

    vertices: np.ndarray
    closed: bool
    kappa: np.ndarray
    normals: np.ndarray

    @property
    def arclength(self) -> float:
        segs = self._segments()
        return float(np.sum(np.linalg.norm(segs, axis=1)))

    def _segments(self) -> np.ndarray:
        v = self.vertices
        if self.closed:
            return np.diff(np.vstack([v, v[:1]]), axis=0)
        return np.diff(v, axis=0)


@dataclass(frozen=True)
class Contact:
    """A point where the interface meets the domain boundary."""

    point: np.ndarray
    theta: float
    axis: int
    side: int


@dataclass(frozen=True)
class InterfaceCurve:
    """All components of one level set, longest first."""

    grid: GridSpec
    level: float
    components: tuple[CurveComponent, ...]

    @property
    def total_length(self) -> float:
        return sum(c.arclength for c in self.components)


# ---------------------------------------------------------------------------
# sampling helpers


def bilinear_sample(field: ScalarField, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of cell-centered data at physical points.

    Points are clamped to the hull of the cell centers, so values in the
    half-cell boundary strip equal the boundary-cell trace.
    """
    grid = field.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.dim:
        raise ParameterError("points do not match the grid dimension")
    idx = []
    frac = []
    for a in range(grid.dim):
        h = grid.spacing[a]
        u = pts[:, a] / h - 0.5
        u = np.clip(u, 0.0, grid.cells[a] - 1.0)
        i = np.minimum(np.floor(u).astype(int), grid.cells[a] - 2)
        i = np.maximum(i, 0)
        idx.append(i)
        frac.append(u - i)
    vals = np.zeros(len(pts))
    if grid.dim == 1:
        v = field.values
        vals = v[idx[0]] * (1 - frac[0]) + v[idx[0] + 1] * frac[0]
    else:
        v = field.values
        i, j = idx
        s, t = frac
        vals = (
            v[i, j] * (1 - s) * (1 - t)
            + v[i + 1, j] * s * (1 - t)
            + v[i, j + 1] * (1 - s) * t
            + v[i + 1, j + 1] * s * t
        )
    return vals if np.asarray(points).ndim > 1 else vals[:1]


# ---------------------------------------------------------------------------
# interface extraction


def _merge_close(vertices: np.ndarray, closed: bool, min_sep: float) -> np.ndarray:
    """Drop vertices closer than min_sep to their predecessor."""
    keep = [0]
    for k in range(1, len(vertices)):
        if np.linalg.norm(vertices[k] - vertices[keep[-1]]) >= min_sep:
            keep.append(k)
    out = vertices[keep]
    if closed and len(out) > 2 and np.linalg.norm(out[-1] - out[0]) < min_sep:
        out = out[:-1]
    return out


def _extend_to_wall(vertices: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Extend both open ends along their end tangents to the nearest wall.

    Marching squares stops at the outermost cell centers; the physical walls
    are half a cell further out.
    """
    out = vertices.copy()
    for end in (0, -1):
        p = out[end]
        q = out[1] if end == 0 else out[-2]
        d = p - q
        norm = np.linalg.norm(d)
        if norm == 0:
            continue
        d /= norm
        best = np.inf
        for a in range(2):
            for wall in (0.0, grid.lengths[a]):
                if abs(d[a]) < 1e-12:
                    continue
                t = (wall - p[a]) / d[a]
                if 0 <= t < best:
                    best = t
        if np.isfinite(best) and best <= grid.spacing[0] * 2:
            out[end] = p + best * d
    return out


def _smooth_polyline(vertices: np.ndarray, closed: bool, passes: int = 4) -> np.ndarray:
    """Laplacian smoothing that removes marching-squares staircase noise."""
    v = vertices.copy()
    for _ in range(passes):
        if closed:
            v = 0.5 * v + 0.25 * (np.roll(v, 1, axis=0) + np.roll(v, -1, axis=0))
        elif len(v) > 2:
            inner_v = 0.5 * v[1:-1] + 0.25 * (v[:-2] + v[2:])
            v = np.vstack([v[:1], inner_v, v[-1:]])
    return v


def _vertex_normals(vertices: np.ndarray, closed: bool) -> np.ndarray:
    """Unit normals obtained by rotating the averaged tangent by +90 degrees."""
    if closed:
        tang = np.roll(vertices, -1, axis=0) - np.roll(vertices, 1, axis=0)
    else:
        tang = np.gradient(vertices, axis=0)
    norms = np.linalg.norm(tang, axis=1)
    norms[norms == 0] = 1.0
    tang /= norms[:, None]
    return np.stack([-tang[:, 1], tang[:, 0]], axis=1)


def _signed_kappa(vertices: np.ndarray, closed: bool) -> np.ndarray:
    """Signed curvature per vertex from the three-point circumscribed circle.

    The sign follows the traversal orientation (positive for left turns); the
    caller flips it globally once the outward side is known.
    """
    n = len(vertices)
    kappa = np.zeros(n)
    if n < 3:
        return kappa
    if closed:
        prev = np.roll(vertices, 1, axis=0)
        nxt = np.roll(vertices, -1, axis=0)
        sel = slice(None)
    else:
        prev = vertices[:-2]
        nxt = vertices[2:]
        sel = slice(1, -1)
    a = vertices[sel] - prev[sel] if closed else vertices[1:-1] - prev
    b = (nxt[sel] if closed else nxt) - (vertices[sel] if closed else vertices[1:-1])
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    la = np.linalg.norm(a, axis=1)
    lb = np.linalg.norm(b, axis=1)
    lc = np.linalg.norm(a + b, axis=1)
    denom = la * lb * lc
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(denom > 0, 2.0 * cross / np.maximum(denom, 1e-300), 0.0)
    if closed:
        kappa[:] = k
    else:
        kappa[1:-1] = k
        kappa[0] = kappa[1]
        kappa[-1] = kappa[-2]
    return kappa


def _moving_average(x: np.ndarray, closed: bool, half: int = _KAPPA_SMOOTH) -> np.ndarray:
    n = len(x)
    if n <= 2 * half:
        return x
    w = 2 * half + 1
    if closed:
        ext = np.concatenate([x[-half:], x, x[:half]])
        return np.convolve(ext, np.ones(w) / w, mode="valid")
    ext = np.concatenate([np.full(half, x[0]), x, np.full(half, x[-1])])
    return np.convolve(ext, np.ones(w) / w, mode="valid")


def extract_interface(rho: ScalarField, level: float = 0.5) -> InterfaceCurve:
    """Extract the level set of a 2D density as polyline components.

    Components are returned longest first.  Open components are extended to
    the physical walls, vertices closer than a quarter cell are merged, and
    the signed curvature (positive where the region above ``level`` is
    convex) plus outward unit normals are attached to every component.
    """
    grid = rho.grid
    if grid.dim != 2:
        raise DomainError("interface extraction requires a 2D grid")
    h = min(grid.spacing)
    contours = measure.find_contours(rho.values, level)
    comps = []
    for c in contours:
        verts = np.column_stack(
            [(c[:, 0] + 0.5) * grid.spacing[0], (c[:, 1] + 0.5) * grid.spacing[1]]
        )
        closed = bool(np.allclose(verts[0], verts[-1]))
        if closed:
            verts = verts[:-1]
        else:
            verts = _extend_to_wall(verts, grid)
        verts = _merge_close(verts, closed, _MERGE_FRACTION * h)
        if len(verts) < (3 if closed else 2):
            continue
        verts = _smooth_polyline(verts, closed)
        kappa = _moving_average(_signed_kappa(verts, closed), closed)
        normals = _vertex_normals(verts, closed)
        # Orient so normals point out of the high-density side; then a convex
        # saturated region has positive curvature.
        mid = len(verts) // 2
        probe_out = verts[mid] + 1.5 * h * normals[mid]
        probe_in = verts[mid] - 1.5 * h * normals[mid]
        probe_out = np.clip(probe_out, 0.0, np.asarray(grid.lengths))
        probe_in = np.clip(probe_in, 0.0, np.asarray(grid.lengths))
        if bilinear_sample(rho, probe_out[None])[0] > bilinear_sample(rho, probe_in[None])[0]:
            # The left normal points into the dense region: flip it outward.
            # The traversal then has the dense side on its left, so left
            # turns (positive cross product) are already convex.
            normals = -normals
        else:
            kappa = -kappa
        comps.append(CurveComponent(verts, closed, kappa, normals))
    comps.sort(key=lambda c: c.arclength, reverse=True)
    return InterfaceCurve(grid, level, tuple(comps))


def interface_perimeter(rho: ScalarField, level: float = 0.5) -> float:
    """Total arclength of the level set of a 2D density."""
    return extract_interface(rho, level).total_length


def wall_contact_length(rho: ScalarField, threshold: float = 0.5) -> float:
    """Boundary length wetted by the region where the density exceeds threshold.

    Uses the boundary-adjacent cell values, so each wetted boundary face
    contributes its full face measure.
    """
    total = 0.0
    for axis, side, (sl0, _), face_measure in boundary_faces(rho.grid):
        vals = np.atleast_1d(rho.values[sl0])
        total += float(np.count_nonzero(vals > threshold)) * face_measure
    return total


# ---------------------------------------------------------------------------
# contact angles


def _end_tangent(vertices: np.ndarray, end: int) -> np.ndarray:
    """Least-squares unit tangent over the last few vertices, pointing away
    from the endpoint into the curve."""
    pts = vertices[:_TANGENT_POINTS] if end == 0 else vertices[-_TANGENT_POINTS:][::-1]
    if len(pts) < 2:
        return np.array([1.0, 0.0])
    center = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - center)
    d = vt[0]
    if np.dot(d, pts[-1] - pts[0]) < 0:
        d = -d
    return d / np.linalg.norm(d)


def _nearest_wall(point: np.ndarray, grid: GridSpec) -> tuple[int, int, float]:
    best = (0, 0, np.inf)
    for a in range(2):
        for side, wall in ((0, 0.0), (1, grid.lengths[a])):
            d = abs(point[a] - wall)
            if d < best[2]:
                best = (a, side, d)
    return best


def contact_angle(curve: InterfaceCurve, rho: ScalarField) -> tuple[Contact, ...]:
    """Measure the angle between the interface and the wall at each contact.

    The angle is measured inside the dense region: pi/2 for an interface
    meeting the wall orthogonally, approaching pi for a fully wetting film.
    Open endpoints further than two cells from every wall are ignored.
    """
    grid = curve.grid
    h = min(grid.spacing)
    contacts = []
    for comp in curve.components:
        if comp.closed:
            continue
        for end in (0, -1):
            p = comp.vertices[end]
            axis, side, dist = _nearest_wall(p, grid)
            if dist > 2.0 * h:
                continue
            d_curve = _end_tangent(comp.vertices, 0 if end == 0 else -1)
            # Wall tangent pointing toward the dense side, found by probing
            # the density a short way along the wall in both directions.
            d_wall = np.zeros(2)
            d_wall[1 - axis] = 1.0
            probes = []
            for s in (+1.0, -1.0):
                q = p + 3.0 * h * s * d_wall
                q[axis] = (0.5 * grid.spacing[axis]) if side == 0 else (
                    grid.lengths[axis] - 0.5 * grid.spacing[axis]
                )
                q = np.clip(q, 0.0, np.asarray(grid.lengths))
                probes.append(bilinear_sample(rho, q[None])[0])
            if probes[1] > probes[0]:
                d_wall = -d_wall
            cosang = float(np.clip(np.dot(d_wall, d_curve), -1.0, 1.0))
            contacts.append(Contact(p.copy(), float(np.arccos(cosang)), axis, side))
    return tuple(contacts)


# ---------------------------------------------------------------------------
# area / perimeter metrics


def geometry_metrics(curve: InterfaceCurve) -> dict:
    """Area, perimeter and isoperimetric ratio of the enclosed region.

    Closed components use the shoelace formula; open components are closed
    with the straight chord between their endpoints, which is exact when both
    endpoints lie on the same wall.  The perimeter counts interface length
    only, so an interior disc has isoperimetric ratio 1.
    """
    area = 0.0
    for comp in curve.components:
        v = comp.vertices
        x, y = v[:, 0], v[:, 1]
        a = 0.5 * abs(
            float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        )
        area += a
    per = curve.total_length
    iso = 4.0 * np.pi * area / per**2 if per > 0 else 0.0
    return {"area": area, "perimeter": per, "isoperimetric_ratio": iso}


# ---------------------------------------------------------------------------
# analytic tangential test fields


@dataclass(frozen=True)
class TestVectorField:
    """Analytic vector field on a box with exactly zero normal trace.

    Component a is ``fns[a](x, ...) * sin(pi x_a / L_a)``, so the normal
    component vanishes on every wall while tangential components survive.
    Values and derivatives are available at arbitrary points for interface
    quadratures, and the field can be sampled onto a grid for volume
    quadratures.
    """

    grid: GridSpec
    fns: tuple

    def __post_init__(self):
        if len(self.fns) != self.grid.dim:
            raise ParameterError("one component callable per axis is required")

    def value(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros_like(pts)
        coords = [pts[:, a] for a in range(self.grid.dim)]
        for a in range(self.grid.dim):
            taper = np.sin(np.pi * pts[:, a] / self.grid.lengths[a])
            out[:, a] = self.fns[a](*coords) * taper
        return out

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """J[:, a, b] = d xi_a / d x_b by central differences on the formula."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = self.grid.dim
        jac = np.zeros((len(pts), d, d))
        step = 1e-6
        for b in range(d):
            dp = np.zeros(d)
            dp[b] = step
            jac[:, :, b] = (self.value(pts + dp) - self.value(pts - dp)) / (2 * step)
        return jac

    def divergence(self, points: np.ndarray) -> np.ndarray:
        return np.trace(self.jacobian(points), axis1=1, axis2=2)

    def as_vector_field(self, zero_layers: int = 0) -> VectorField:
        from .grid import tangential_test_field

        return tangential_test_field(self.grid, self.fns, zero_layers)


# ---------------------------------------------------------------------------
# first variation: diffuse side, sharp limit, and the exact identity


def first_variation_lhs(
    rho: ScalarField, phi: ScalarField, xi: VectorField, params: ChemParams
) -> float:
    """Diffuse first variation -eps^-1 int (1/(2 sigma) - phi) xi . grad rho."""
    grad_rho = gradient(rho)
    weight = 1.0 / (2.0 * params.sigma) - phi.values
    s = 0.0
    for a in range(rho.grid.dim):
        s += float(np.sum(weight * xi.components[a] * grad_rho.components[a]))
    return -s * rho.grid.cell_volume / params.epsilon


def first_variation_limit_rhs(
    curve: InterfaceCurve, xi: TestVectorField, rho: ScalarField, params: ChemParams
) -> float:
    """Sharp-interface limit of the first variation.

    1/(4 sigma^(3/2)) [ int_interface (div xi - nu nu : D xi) ds
                        + w int_wall (div xi - n n : D xi) rho ds ]
    with the wetting weight w = min(1, 2 alpha / (alpha + sqrt(sigma) beta)).
    Interface segments use midpoint quadrature; the wall integral uses the
    boundary faces wetted by the density.
    """
    grid = curve.grid
    total = 0.0
    for comp in curve.components:
        v = comp.vertices
        segs = comp._segments()
        mids = v + 0.5 * segs if comp.closed else v[:-1] + 0.5 * segs
        ds = np.linalg.norm(segs, axis=1)
        keep = ds > 0
        mids, segs, ds = mids[keep], segs[keep], ds[keep]
        nu = np.stack([-segs[:, 1], segs[:, 0]], axis=1) / ds[:, None]
        jac = xi.jacobian(mids)
        div = np.trace(jac, axis1=1, axis2=2)
        nn = np.einsum("ka,kab,kb->k", nu, jac, nu)
        total += float(np.sum((div - nn) * ds))

    w = boundary_weight(params)
    wall = 0.0
    for axis, side, (sl0, _), face_measure in boundary_faces(grid):
        dense = np.atleast_1d(rho.values[sl0]) > 0.5
        if not np.any(dense):
            continue
        tang_axis = 1 - axis
        centers = grid.axis_centers(tang_axis)[dense]
        pts = np.zeros((len(centers), 2))
        pts[:, tang_axis] = centers
        pts[:, axis] = 0.0 if side == 0 else grid.lengths[axis]
        jac = xi.jacobian(pts)
        div = np.trace(jac, axis1=1, axis2=2)
        nn = jac[:, axis, axis]
        wall += float(np.sum(div - nn)) * face_measure
    total += w * wall
    return total / (4.0 * params.sigma**1.5)


def curvature_flux(curve: InterfaceCurve, xi: TestVectorField) -> float:
    """Mean-curvature form int kappa xi . nu ds over all components.

    For closed curves this equals the tangential-divergence integral in the
    sharp first-variation limit, giving an independent cross-check.
    """
    total = 0.0
    for comp in curve.components:
        vals = xi.value(comp.vertices)
        flux = comp.kappa * np.einsum("ka,ka->k", vals, comp.normals)
        v = comp.vertices
        if comp.closed:
            ds = 0.5 * (
                np.linalg.norm(v - np.roll(v, 1, axis=0), axis=1)
                + np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
            )
        else:
            seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
            ds = np.zeros(len(v))
            ds[:-1] += 0.5 * seg
            ds[1:] += 0.5 * seg
        total += float(np.sum(flux * ds))
    return total


def _jacobian_on_grid(xi: VectorField) -> list[list[np.ndarray]]:
    """J[a][b] = d xi_a / d x_b with the same stencils as `gradient`."""
    grid = xi.grid
    return [
        list(gradient(ScalarField(grid, comp)).components) for comp in xi.components
    ]


def firstvar_identity_check(
    rho: ScalarField, xi: VectorField, params: ChemParams
) -> dict:
    """Check the exact identity between the diffuse first variation and the
    divergence-form right-hand side, valid for every admissible density.

    The problem is rescaled to sigma = 1 (phi_bar = sigma phi,
    eps_bar = eps / sqrt(sigma), beta_bar = sqrt(sigma) beta), where the
    identity reads

      -eps^-1 int (1 - 2 phi) xi . grad rho
        = eps^-1 int [(1 - rho) phi^2 + rho (1 - phi)^2] div xi
          + eps int |grad phi|^2 div xi - 2 eps int grad phi x grad phi : D xi
          (+ alpha/beta int_wall phi^2 (div xi - n n : D xi) when beta != 0)

    Returns lhs, rhs, individual terms, and the relative residual.
    """
    grid = rho.grid
    phi = solve_phi(rho, params)
    sigma = params.sigma
    eps_b = params.epsilon / np.sqrt(sigma)
    beta_b = np.sqrt(sigma) * params.robin.beta
    alpha = params.robin.alpha
    phi_b = ScalarField(grid, sigma * phi.values)

    grad_rho = gradient(rho)
    lhs = 0.0
    for a in range(grid.dim):
        lhs += float(np.sum((1.0 - 2.0 * phi_b.values) * xi.components[a] * grad_rho.components[a]))
    lhs *= -grid.cell_volume / eps_b

    from .grid import divergence

    div_xi = divergence(xi)
    grad_phi = gradient(phi_b)
    jac = _jacobian_on_grid(xi)

    bulk_density = (1.0 - rho.values) * phi_b.values**2 + rho.values * (
        1.0 - phi_b.values
    ) ** 2
    term_bulk = integrate(ScalarField(grid, bulk_density * div_xi.values)) / eps_b
    gp2 = sum(g**2 for g in grad_phi.components)
    term_grad = eps_b * integrate(ScalarField(grid, gp2 * div_xi.values))
    cross = np.zeros(grid.shape)
    for a in range(grid.dim):
        for b in range(grid.dim):
            cross += grad_phi.components[a] * grad_phi.components[b] * jac[a][b]
    term_cross = -2.0 * eps_b * integrate(ScalarField(grid, cross))

    term_wall = 0.0
    if beta_b != 0.0 and alpha != 0.0:
        ratio = alpha / beta_b
        for axis, side, _, face_measure in boundary_faces(grid):
            phi_f = face_trace(phi_b, axis, side)
            div_f = face_trace(div_xi, axis, side)
            dnn_f = face_trace(ScalarField(grid, jac[axis][axis]), axis, side)
            term_wall += ratio * float(
                np.sum(phi_f**2 * (div_f - dnn_f))
            ) * face_measure

    rhs = term_bulk + term_grad + term_cross + term_wall
    scale = max(abs(lhs), abs(rhs), 1e-14)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "term_bulk": term_bulk,
        "term_grad": term_grad,
        "term_cross": term_cross,
        "term_wall": term_wall,
        "residual": abs(lhs - rhs) / scale,
    }


# ---------------------------------------------------------------------------
# surface tension on the interface


def surface_tension_check(
    q: ScalarField,
    curve: InterfaceCurve,
    sigma: float,
    offset_cells: float = 0.0,
) -> dict:
    """Compare an interface pressure trace with kappa/(4 sigma^3/2).

    q is sampled bilinearly at each interface vertex (optionally offset a few
    cells into the dense region).  Returns the per-vertex samples, the
    Young-Laplace reference values, the least-squares slope of q against the
    reference, and the mean values (per component and overall).
    """
    if not curve.components:
        raise DomainError("surface tension check needs a nonempty interface")
    h = min(curve.grid.spacing)
    samples = []
    refs = []
    means = []
    for comp in curve.components:
        pts = comp.vertices - offset_cells * h * comp.normals
        pts = np.clip(pts, 0.0, np.asarray(curve.grid.lengths))
        qs = bilinear_sample(q, pts)
        samples.append(qs)
        refs.append(comp.kappa / (4.0 * sigma**1.5))
        means.append(float(np.mean(qs)))
    all_q = np.concatenate(samples)
    all_ref = np.concatenate(refs)
    denom = float(np.dot(all_ref, all_ref))
    slope = float(np.dot(all_q, all_ref)) / denom if denom > 0 else np.nan
    return {
        "samples": samples,
        "reference": refs,
        "slope": slope,
        "mean_q": means,
        "mean_q_total": float(np.mean(all_q)),
        "mean_reference_total": float(np.mean(all_ref)),
    }


def level_curve_gap(rho: ScalarField, phi: ScalarField, sigma: float) -> float:
    """Largest distance between the rho = 1/2 and phi = 1/(2 sigma) curves.

    A gap above a few cells flags an under-resolved interface (epsilon too
    close to h).
    """
    rho_curve = extract_interface(rho, 0.5)
    phi_curve = extract_interface(phi, 0.5 / sigma)
    if not rho_curve.components or not phi_curve.components:
        return np.inf
    a = np.vstack([c.vertices for c in rho_curve.components])
    b = np.vstack([c.vertices for c in phi_curve.components])
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    forward = np.sqrt(np.min(d2, axis=1)).max()
    backward = np.sqrt(np.min(d2, axis=0)).max()
    return float(max(forward, backward))
