"""Field dump formats.

Text format: header line ``grid dim nx [ny] hx [hy]`` followed by one value
per line in row-major (C) order.  Binary format: raw little-endian float64 in
the same order, with a JSON sidecar carrying dims, spacing, time and params.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DomainError
from .grid import GridSpec, ScalarField

__all__ = ["write_field_text", "read_field_text", "write_field_binary", "read_field_binary"]


def write_field_text(field: ScalarField, path) -> None:
    g = field.grid
    dims = " ".join(str(n) for n in g.cells)
    hs = " ".join(f"{h:.17g}" for h in g.spacing)
    lines = [f"grid {g.dim} {dims} {hs}"]
    lines.extend(f"{v:.17g}" for v in field.values.ravel(order="C"))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_text(path) -> ScalarField:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("grid "):
        raise DomainError(f"{path}: missing field header")
    parts = lines[0].split()
    dim = int(parts[1])
    cells = tuple(int(p) for p in parts[2 : 2 + dim])
    spacing = tuple(float(p) for p in parts[2 + dim : 2 + 2 * dim])
    grid = GridSpec(cells, tuple(n * h for n, h in zip(cells, spacing)))
    values = np.array([float(x) for x in lines[1:] if x.strip()])
    if values.size != grid.n_cells:
        raise DomainError(f"{path}: expected {grid.n_cells} values, found {values.size}")
    return ScalarField(grid, values.reshape(grid.shape))


def write_field_binary(field: ScalarField, path, time: float = 0.0, params: dict | None = None) -> None:
    path = Path(path)
    field.values.astype("<f8").ravel(order="C").tofile(path)
    sidecar = {
        "dims": list(field.grid.cells),
        "lengths": list(field.grid.lengths),
        "spacing": list(field.grid.spacing),
        "time": time,
        "params": params or {},
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))


def read_field_binary(path) -> tuple[ScalarField, dict]:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = GridSpec(tuple(sidecar["dims"]), tuple(sidecar["lengths"]))
    values = np.fromfile(path, dtype="<f8")
    if values.size != grid.n_cells:
        raise DomainError(f"{path}: expected {grid.n_cells} values, found {values.size}")
    return ScalarField(grid, values.reshape(grid.shape)), sidecar
