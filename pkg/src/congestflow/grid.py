"""Cartesian cell-centered grids on a rectangle with discrete calculus.

The domain is a 1D interval or a 2D rectangle tiled exactly by uniform cells.
Scalar data lives at cell centers; the gradient uses centered differences in
the interior and one-sided differences in the boundary-adjacent cells, so it
is exact on affine fields.  All reductions run in a fixed (C-order) summation
order, which keeps results independent of any data-parallel evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "GridSpec",
    "ScalarField",
    "VectorField",
    "RobinSpec",
    "gradient",
    "divergence",
    "integrate",
    "boundary_integral",
    "boundary_faces",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid over (0, L1) or (0, L1) x (0, L2)."""

    cells: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))
        if len(self.cells) not in (1, 2) or len(self.lengths) != len(self.cells):
            raise ParameterError("grid must be 1D or 2D with matching lengths")
        if any(n < 4 for n in self.cells):
            raise ParameterError("need at least 4 cells per axis")
        if any(L <= 0 for L in self.lengths):
            raise ParameterError("axis lengths must be positive")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    def axis_centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, each shaped like the grid."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


def _check_values(grid: GridSpec, values: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != grid.shape:
        raise DomainError(f"{what} shape {arr.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True)
class ScalarField:
    """Cell-centered scalar grid function (density, potential, pressure...)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        arr = _check_values(self.grid, self.values, "scalar field")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable) -> "ScalarField":
        return cls(grid, fn(*grid.meshgrid()) * np.ones(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)


@dataclass(frozen=True)
class VectorField:
    """Cell-centered vector grid function; one component array per axis."""

    grid: GridSpec
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.components) != self.grid.dim:
            raise DomainError("component count must equal grid dimension")
        comps = []
        for c in self.components:
            arr = _check_values(self.grid, c, "vector component").copy()
            arr.setflags(write=False)
            comps.append(arr)
        object.__setattr__(self, "components", tuple(comps))

    @classmethod
    def from_functions(cls, grid: GridSpec, fns: Sequence[Callable]) -> "VectorField":
        X = grid.meshgrid()
        return cls(grid, tuple(fn(*X) * np.ones(grid.shape) for fn in fns))

    def magnitude(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.components))


@dataclass(frozen=True)
class RobinSpec:
    """Boundary condition alpha*phi + beta*eps*dphi/dn = 0 on the whole boundary."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ParameterError("need alpha >= 0, beta >= 0, alpha + beta > 0")


def _diff_axis(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Centered difference in the interior, one-sided at the two end slabs."""
    out = np.empty_like(arr)
    a = np.moveaxis(arr, axis, 0)
    o = np.moveaxis(out, axis, 0)
    o[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
    o[0] = (a[1] - a[0]) / h
    o[-1] = (a[-1] - a[-2]) / h
    return out


def gradient(f: ScalarField) -> VectorField:
    """Discrete gradient; exact on affine fields."""
    h = f.grid.spacing
    comps = tuple(_diff_axis(f.values, h[a], a) for a in range(f.grid.dim))
    return VectorField(f.grid, comps)


def divergence(v: VectorField) -> ScalarField:
    """Discrete divergence with the same per-axis stencils as `gradient`.

    With this pairing the discrete integration-by-parts identity
    <grad f, v> + <f, div v> = 0 holds to rounding precision whenever the
    normal component of v vanishes on the two cell layers adjacent to each
    boundary (how tangential test fields are constructed here).
    """
    h = v.grid.spacing
    out = np.zeros(v.grid.shape)
    for a in range(v.grid.dim):
        out += _diff_axis(v.components[a], h[a], a)
    return ScalarField(v.grid, out)


def integrate(f: ScalarField) -> float:
    """Midpoint rule: sum(f) * cell volume, fixed summation order."""
    return float(np.sum(f.values) * f.grid.cell_volume)


def inner(f: ScalarField, g: ScalarField) -> float:
    """L2 inner product under the midpoint rule."""
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


def vector_inner(v: VectorField, w: VectorField) -> float:
    s = 0.0
    for a, b in zip(v.components, w.components):
        s += float(np.sum(a * b))
    return s * v.grid.cell_volume


def boundary_faces(grid: GridSpec):
    """Iterate boundary face groups as (axis, side, trace_slices, face_measure).

    ``side`` is 0 for the low face, 1 for the high face.  ``trace_slices`` is a
    pair (adjacent, next_inner) of index tuples selecting the boundary-adjacent
    cell layer and the one behind it, used for linear extrapolation to the face.
    """
    for axis in range(grid.dim):
        n = grid.cells[axis]
        face_measure = grid.cell_volume / grid.spacing[axis]
        for side, (i0, i1) in ((0, (0, 1)), (1, (n - 1, n - 2))):
            sl0 = [slice(None)] * grid.dim
            sl1 = [slice(None)] * grid.dim
            sl0[axis] = i0
            sl1[axis] = i1
            yield axis, side, (tuple(sl0), tuple(sl1)), face_measure


def face_trace(f: ScalarField, axis: int, side: int) -> np.ndarray:
    """Boundary face values of f by linear extrapolation from the two inner layers."""
    n = f.grid.cells[axis]
    i0, i1 = (0, 1) if side == 0 else (n - 1, n - 2)
    a = np.moveaxis(f.values, axis, 0)
    return 1.5 * a[i0] - 0.5 * a[i1]


def boundary_integral(f: ScalarField) -> float:
    """Integral of the extrapolated face trace of f over the whole boundary.

    In 1D this is the sum of the two endpoint traces; in 2D each edge is
    integrated with the midpoint rule in the tangential direction (corner
    cells contribute to both incident edges).
    """
    total = 0.0
    for axis, side, _, face_measure in boundary_faces(f.grid):
        total += float(np.sum(face_trace(f, axis, side))) * face_measure
    return total


def tangential_test_field(
    grid: GridSpec, fns: Sequence[Callable], zero_layers: int = 0
) -> VectorField:
    """Sample a vector field whose normal component vanishes on the boundary.

    The callables are multiplied by sin(pi x_a / L_a) in their own axis, so the
    analytic normal trace is exactly zero on every wall.  With
    ``zero_layers=2`` the normal component is additionally zeroed on the two
    boundary-adjacent cell layers, which makes the discrete integration by
    parts with `gradient`/`divergence` exact.
    """
    X = grid.meshgrid()
    comps = []
    for a in range(grid.dim):
        taper = np.sin(np.pi * X[a] / grid.lengths[a])
        vals = fns[a](*X) * taper * np.ones(grid.shape)
        if zero_layers:
            v = np.moveaxis(vals, a, 0)
            v[:zero_layers] = 0.0
            v[-zero_layers:] = 0.0
        comps.append(vals)
    return VectorField(grid, tuple(comps))
