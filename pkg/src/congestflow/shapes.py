"""Initial density builders: indicator shapes and file-backed fields."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ParameterError
from .grid import GridSpec, ScalarField
from .io import read_field_binary, read_field_text

__all__ = [
    "disc",
    "two_discs",
    "ellipse",
    "half_disc_on_wall",
    "half_square",
    "interval",
    "random_admissible",
    "from_file",
    "build_shape",
]


def _require_2d(grid: GridSpec, what: str) -> None:
    if grid.dim != 2:
        raise DomainError(f"{what} requires a 2D grid")


def disc(grid: GridSpec, center: tuple[float, float], radius: float) -> ScalarField:
    """Indicator of a disc."""
    _require_2d(grid, "disc")
    if radius <= 0:
        raise ParameterError("disc radius must be positive")
    X, Y = grid.meshgrid()
    inside = (X - center[0]) ** 2 + (Y - center[1]) ** 2 < radius**2
    return ScalarField(grid, inside.astype(float))


def two_discs(
    grid: GridSpec,
    centers: tuple[tuple[float, float], tuple[float, float]],
    radii: tuple[float, float],
) -> ScalarField:
    """Indicator of two disjoint discs."""
    a = disc(grid, centers[0], radii[0])
    b = disc(grid, centers[1], radii[1])
    if float(np.max(a.values + b.values)) > 1.0:
        raise ParameterError("the two discs overlap")
    return ScalarField(grid, a.values + b.values)


def ellipse(
    grid: GridSpec, center: tuple[float, float], semi_axes: tuple[float, float]
) -> ScalarField:
    """Indicator of an axis-aligned ellipse."""
    _require_2d(grid, "ellipse")
    if min(semi_axes) <= 0:
        raise ParameterError("ellipse semi-axes must be positive")
    X, Y = grid.meshgrid()
    inside = ((X - center[0]) / semi_axes[0]) ** 2 + (
        (Y - center[1]) / semi_axes[1]
    ) ** 2 < 1.0
    return ScalarField(grid, inside.astype(float))


def half_disc_on_wall(grid: GridSpec, center_x: float, radius: float) -> ScalarField:
    """Indicator of a half disc sitting on the bottom wall (y = 0)."""
    _require_2d(grid, "half_disc_on_wall")
    if radius <= 0:
        raise ParameterError("half-disc radius must be positive")
    X, Y = grid.meshgrid()
    inside = (X - center_x) ** 2 + Y**2 < radius**2
    return ScalarField(grid, inside.astype(float))


def half_square(grid: GridSpec, margin: float = 0.0) -> ScalarField:
    """Indicator of the lower half of the unit square, optionally shrunk.

    With ``margin > 0`` the set is [margin, Lx - margin] x [margin, Ly/2 -
    margin], detached from every wall; with ``margin = 0`` it touches three
    walls.
    """
    _require_2d(grid, "half_square")
    X, Y = grid.meshgrid()
    lx, ly = grid.lengths
    inside = (
        (X > margin) & (X < lx - margin) & (Y > margin) & (Y < 0.5 * ly - margin)
    )
    return ScalarField(grid, inside.astype(float))


def interval(grid: GridSpec, a: float, b: float) -> ScalarField:
    """Indicator of an interval on a 1D grid."""
    if grid.dim != 1:
        raise DomainError("interval requires a 1D grid")
    if not a < b:
        raise ParameterError("interval endpoints must satisfy a < b")
    x = grid.axis_centers(0)
    return ScalarField(grid, ((x > a) & (x < b)).astype(float))


def random_admissible(
    grid: GridSpec, seed: int, smooth: bool = True, modes: int = 4
) -> ScalarField:
    """A reproducible random density with values in [0, 1].

    With ``smooth=True`` the field is a fixed low-order Fourier series whose
    coefficients depend only on the seed, so the same function is sampled on
    every resolution and its gradients stay resolved under refinement.  With
    ``smooth=False`` the field is independent uniform noise per cell.
    """
    rng = np.random.default_rng(seed)
    if not smooth:
        return ScalarField(grid, rng.uniform(0.0, 1.0, size=grid.shape))
    axes = [grid.axis_centers(a) for a in range(grid.dim)]
    vals = np.zeros(grid.shape)
    mean_square = 0.0
    for kx in range(modes + 1):
        for ky in range(modes + 1) if grid.dim == 2 else (0,):
            if kx == 0 and ky == 0:
                continue
            a_cc, a_cs, a_sc, a_ss = rng.normal(size=4) / (1.0 + kx * kx + ky * ky)
            wx = 2.0 * np.pi * kx * axes[0] / grid.lengths[0]
            fx_c, fx_s = np.cos(wx), np.sin(wx)
            mx_c, mx_s = (1.0, 0.0) if kx == 0 else (0.5, 0.5)
            if grid.dim == 1:
                vals += a_cc * fx_c + a_sc * fx_s
                mean_square += a_cc**2 * mx_c + a_sc**2 * mx_s
                continue
            wy = 2.0 * np.pi * ky * axes[1] / grid.lengths[1]
            fy_c, fy_s = np.cos(wy), np.sin(wy)
            my_c, my_s = (1.0, 0.0) if ky == 0 else (0.5, 0.5)
            vals += (
                a_cc * np.outer(fx_c, fy_c)
                + a_cs * np.outer(fx_c, fy_s)
                + a_sc * np.outer(fx_s, fy_c)
                + a_ss * np.outer(fx_s, fy_s)
            )
            mean_square += (
                a_cc**2 * mx_c * my_c
                + a_cs**2 * mx_c * my_s
                + a_sc**2 * mx_s * my_c
                + a_ss**2 * mx_s * my_s
            )
    # Normalize by the exact RMS of the series (resolution independent) and
    # squash smoothly so every grid samples the same function inside (0, 1).
    vals = 0.5 + 0.45 * np.tanh(1.2 * vals / np.sqrt(mean_square))
    return ScalarField(grid, vals)


def from_file(grid: GridSpec, path: str) -> ScalarField:
    """Load a density dump and check that it matches the run grid."""
    if str(path).endswith(".bin"):
        field, _ = read_field_binary(path)
    else:
        field = read_field_text(path)
    if field.grid != grid:
        raise DomainError(
            f"field file {path} has grid {field.grid.cells}, run expects {grid.cells}"
        )
    return field


def build_shape(grid: GridSpec, name: str, params: dict) -> ScalarField:
    """Dispatch a shape spec (name + geometry parameters) to its builder."""
    try:
        if name == "disc":
            return disc(grid, tuple(params["center"]), params["radius"])
        if name == "two_discs":
            return two_discs(
                grid,
                (tuple(params["center"]), tuple(params["center2"])),
                (params["radius"], params["radius2"]),
            )
        if name == "ellipse":
            return ellipse(grid, tuple(params["center"]), tuple(params["semi_axes"]))
        if name == "half_disc_on_wall":
            return half_disc_on_wall(grid, params["center_x"], params["radius"])
        if name == "half_square":
            return half_square(grid, params.get("margin", 0.0))
        if name == "interval":
            return interval(grid, params["a"], params["b"])
        if name == "random":
            return random_admissible(grid, int(params.get("seed", 0)))
        if name == "file":
            return from_file(grid, params["path"])
    except KeyError as exc:
        raise ParameterError(f"shape '{name}' is missing parameter {exc}") from None
    raise ParameterError(f"unknown shape '{name}'")
