"""Read-only access to run directories.

A run directory is the on-disk contract with the simulation harness:

    config.txt                echoed configuration
    manifest.json             schema version, grid, artifact hashes
    energy.csv                one row per logged step
    fields/rho_NNNNNN.bin     little-endian float64, C order
    fields/rho_NNNNNN.bin.json  sidecar: dims, lengths, spacing, time
    curves/interface_NNNNNN_cK.csv  x,y,kappa polylines
    curves/contacts_NNNNNN.csv      x,y,theta,target_theta
    report.json               preset metrics (optional)

Nothing here recomputes physics; this module only parses the declared
formats and refuses schema versions it does not understand.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: The manifest schema this reader understands.
SUPPORTED_SCHEMA = 1


class SchemaMismatchError(RuntimeError):
    """The run directory declares a schema version this reader cannot parse."""


class RunFormatError(RuntimeError):
    """The run directory is missing or malformed."""


@dataclass(frozen=True)
class FieldDump:
    """One density snapshot: values plus the geometry from its sidecar."""

    values: np.ndarray
    lengths: tuple[float, ...]
    spacing: tuple[float, ...]
    time: float
    step: int


@dataclass(frozen=True)
class CurveSet:
    """All interface polylines and contact points logged for one step."""

    step: int
    components: tuple[np.ndarray, ...]  # each (k, 3): x, y, kappa
    contacts: np.ndarray  # (m, 4): x, y, theta, target_theta


@dataclass
class RunArtifacts:
    """Read-only view of one run directory."""

    path: Path
    manifest: dict
    energy_columns: tuple[str, ...]
    energy: np.ndarray  # (rows, columns)
    steps: tuple[int, ...]
    report: dict | None = None
    _fields: dict = field(default_factory=dict, repr=False)
    _curves: dict = field(default_factory=dict, repr=False)

    @property
    def grid_cells(self) -> tuple[int, ...]:
        return tuple(self.manifest["grid"]["cells"])

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(self.manifest["grid"]["lengths"])

    def energy_series(self, column: str) -> np.ndarray:
        try:
            idx = self.energy_columns.index(column)
        except ValueError:
            raise RunFormatError(
                f"energy.csv has no column {column!r}; found {self.energy_columns}"
            ) from None
        return self.energy[:, idx]

    def field(self, step: int) -> FieldDump:
        if step not in self._fields:
            self._fields[step] = _read_field(self.path, step)
        return self._fields[step]

    def curves(self, step: int) -> CurveSet:
        if step not in self._curves:
            self._curves[step] = _read_curves(self.path, step)
        return self._curves[step]


def _read_field(run_dir: Path, step: int) -> FieldDump:
    base = run_dir / "fields" / f"rho_{step:06d}.bin"
    sidecar_path = Path(str(base) + ".json")
    if not base.is_file() or not sidecar_path.is_file():
        raise RunFormatError(f"missing field dump for step {step} in {run_dir}")
    sidecar = json.loads(sidecar_path.read_text())
    dims = tuple(int(d) for d in sidecar["dims"])
    values = np.fromfile(base, dtype="<f8")
    if values.size != int(np.prod(dims)):
        raise RunFormatError(
            f"{base}: expected {int(np.prod(dims))} values, found {values.size}"
        )
    return FieldDump(
        values=values.reshape(dims),
        lengths=tuple(float(x) for x in sidecar["lengths"]),
        spacing=tuple(float(x) for x in sidecar["spacing"]),
        time=float(sidecar.get("time", 0.0)),
        step=step,
    )


def _read_curves(run_dir: Path, step: int) -> CurveSet:
    curves_dir = run_dir / "curves"
    components = []
    k = 0
    while True:
        path = curves_dir / f"interface_{step:06d}_c{k}.csv"
        if not path.is_file():
            break
        components.append(_read_csv_columns(path, ("x", "y", "kappa")))
        k += 1
    contacts_path = curves_dir / f"contacts_{step:06d}.csv"
    if contacts_path.is_file():
        contacts = _read_csv_columns(contacts_path, ("x", "y", "theta", "target_theta"))
    else:
        contacts = np.empty((0, 4))
    return CurveSet(step=step, components=tuple(components), contacts=contacts)


def _read_csv_columns(path: Path, columns: tuple[str, ...]) -> np.ndarray:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            try:
                rows.append([float(row[c]) for c in columns])
            except (KeyError, TypeError, ValueError) as exc:
                raise RunFormatError(f"{path}: bad row {row!r}: {exc}") from None
    return np.asarray(rows, dtype=float).reshape(-1, len(columns))


def load_run(run_dir) -> RunArtifacts:
    """Open a run directory, checking the manifest schema version."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise RunFormatError(f"{run_dir} is not a run directory (no manifest.json)")
    manifest = json.loads(manifest_path.read_text())
    schema = manifest.get("schema")
    if schema != SUPPORTED_SCHEMA:
        raise SchemaMismatchError(
            f"{run_dir}: manifest declares schema {schema!r}, "
            f"this reader supports {SUPPORTED_SCHEMA}"
        )
    energy_path = run_dir / "energy.csv"
    if not energy_path.is_file():
        raise RunFormatError(f"{run_dir}: missing energy.csv")
    with energy_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise RunFormatError(f"{energy_path}: empty file")
        data = [[float(v) for v in row] for row in reader if row]
    energy = np.asarray(data, dtype=float).reshape(-1, len(header))

    steps = sorted(
        int(p.stem.split("_")[1])
        for p in (run_dir / "fields").glob("rho_*.bin")
    ) if (run_dir / "fields").is_dir() else []

    report_path = run_dir / "report.json"
    report = json.loads(report_path.read_text()) if report_path.is_file() else None
    return RunArtifacts(
        path=run_dir,
        manifest=manifest,
        energy_columns=tuple(header),
        energy=energy,
        steps=tuple(steps),
        report=report,
    )


def load_preset_report(out_dir) -> dict:
    """Top-level report.json of a preset output tree (above the point dirs)."""
    path = Path(out_dir) / "report.json"
    if not path.is_file():
        raise RunFormatError(f"{out_dir}: no report.json")
    return json.loads(path.read_text())
