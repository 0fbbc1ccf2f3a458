"""Run orchestration: deterministic simulation, artifact persistence, replay.

A run directory contains:

  config.txt                  canonical config echo (the replay input)
  manifest.json               params, grid, schema version, sha256 of every artifact
  energy.csv                  one row per logged step (columns fixed below)
  fields/rho_NNNNNN.bin/.json density dumps (binary + JSON sidecar)
  curves/interface_NNNNNN_cK.csv   x, y, kappa per interface component
  curves/contacts_NNNNNN.csv  x, y, theta, target_theta
  report.json                 per-metric pass/fail, measured, target, tolerance
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import analysis
from .config import RunConfig, render_config
from .energy import energy_terms, entropy_integral, perimeter_estimate_via_phi
from .errors import ConfigError
from .grid import ScalarField, integrate
from .io import write_field_binary
from .jko import run_flow
from .shapes import build_shape

__all__ = [
    "ENERGY_COLUMNS",
    "SCHEMA_VERSION",
    "simulate",
    "write_run",
    "replay_check",
    "output_root",
]

SCHEMA_VERSION = 1

ENERGY_COLUMNS = (
    "t",
    "mass",
    "f_eps",
    "j_direct",
    "j_symmetric",
    "j_phase",
    "saturation",
    "mismatch",
    "dirichlet",
    "bdry_flux",
    "bdry_trace",
    "entropy",
    "perimeter_estimate",
)

#: Environment variable naming the default parent directory for run output.
OUTPUT_ROOT_ENV = "CONGESTFLOW_OUTPUT_ROOT"


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def _fmt(x: float) -> str:
    return "%.17g" % x


def _energy_rows(cfg: RunConfig, states) -> list[list[str]]:
    chem = cfg.model.chem
    rows = []
    for st in states:
        terms = energy_terms(st.rho, st.phi, chem)
        ent = entropy_integral(st.rho)
        f_eps = terms["j_direct"] + cfg.model.mu * ent
        per = perimeter_estimate_via_phi(st.phi, chem.sigma)
        vals = (
            st.n * cfg.jko.tau,
            integrate(st.rho),
            f_eps,
            terms["j_direct"],
            terms["j_symmetric"],
            terms["j_phase"],
            terms["saturation"],
            terms["mismatch"],
            terms["dirichlet"],
            terms["bdry_flux"],
            terms["bdry_trace"],
            ent,
            per,
        )
        rows.append([_fmt(v) for v in vals])
    return rows


def simulate(cfg: RunConfig, with_recovery: bool = False, progress=None):
    """Run the flow for a config, with single-threaded BLAS reductions so the
    logs are bit-identical regardless of the machine's thread defaults."""
    rho0 = build_shape(cfg.grid, cfg.shape, cfg.shape_params)
    with threadpool_limits(limits=1):
        states, summary = run_flow(
            rho0,
            cfg.t_final,
            cfg.jko,
            log_every=cfg.log_every,
            with_recovery=with_recovery,
            progress=progress,
        )
    return rho0, states, summary


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_curves(outdir: Path, n: int, rho: ScalarField) -> list[Path]:
    paths = []
    if rho.grid.dim != 2:
        return paths
    curve = analysis.extract_interface(rho)
    for k, comp in enumerate(curve.components):
        path = outdir / f"interface_{n:06d}_c{k}.csv"
        with open(path, "w") as fh:
            fh.write("x,y,kappa\n")
            for (x, y), kap in zip(comp.vertices, comp.kappa):
                fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(kap)}\n")
        paths.append(path)
    contacts = analysis.contact_angle(curve, rho)
    if contacts:
        path = outdir / f"contacts_{n:06d}.csv"
        with open(path, "w") as fh:
            fh.write("x,y,theta,target_theta\n")
            for c in contacts:
                fh.write(
                    f"{_fmt(c.point[0])},{_fmt(c.point[1])},{_fmt(c.theta)},nan\n"
                )
        paths.append(path)
    return paths


def write_run(run_dir, cfg: RunConfig, states, summary, report: dict) -> Path:
    """Persist a completed run and its manifest; returns the directory."""
    run_dir = Path(run_dir)
    (run_dir / "fields").mkdir(parents=True, exist_ok=True)
    (run_dir / "curves").mkdir(exist_ok=True)

    config_text = render_config(cfg)
    (run_dir / "config.txt").write_text(config_text)

    artifacts = {}

    field_paths = []
    for st in states:
        base = run_dir / "fields" / f"rho_{st.n:06d}.bin"
        write_field_binary(
            st.rho,
            base,
            time=st.n * cfg.jko.tau,
            params={"schema": SCHEMA_VERSION},
        )
        field_paths += [base, Path(str(base) + ".json")]

    with open(run_dir / "energy.csv", "w") as fh:
        fh.write(",".join(ENERGY_COLUMNS) + "\n")
        for row in _energy_rows(cfg, states):
            fh.write(",".join(row) + "\n")

    curve_paths = []
    for st in states:
        curve_paths += _write_curves(run_dir / "curves", st.n, st.rho)

    (run_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True, default=_json_safe) + "\n"
    )

    for path in field_paths + curve_paths + [run_dir / "energy.csv", run_dir / "report.json"]:
        artifacts[str(path.relative_to(run_dir))] = _sha256(path)

    manifest = {
        "schema": SCHEMA_VERSION,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "grid": {"cells": list(cfg.grid.cells), "lengths": list(cfg.grid.lengths)},
        "summary": {k: _json_safe(v) for k, v in (summary or {}).items()},
        "artifacts": artifacts,
    }
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return run_dir


def _json_safe(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def replay_check(run_dir) -> dict:
    """Verify a run directory: artifact integrity and bit-identical replay.

    Re-runs the stored config and compares the regenerated energy CSV byte
    for byte.  Returns a dict with 'integrity_ok', 'replay_ok', and any
    mismatching paths.
    """
    from .config import parse_config

    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    mismatched = []
    for rel, digest in manifest["artifacts"].items():
        path = run_dir / rel
        if not path.exists() or _sha256(path) != digest:
            mismatched.append(rel)

    config_text = (run_dir / "config.txt").read_text()
    integrity_ok = (
        not mismatched
        and hashlib.sha256(config_text.encode()).hexdigest() == manifest["config_sha256"]
    )

    cfgs = parse_config(config_text, override_scale_guard=True)
    if len(cfgs) != 1:
        raise ConfigError(["replayed config must describe a single run"])
    rho0, states, summary = simulate(cfgs[0])
    lines = [",".join(ENERGY_COLUMNS)] + [
        ",".join(r) for r in _energy_rows(cfgs[0], states)
    ]
    regenerated = "\n".join(lines) + "\n"
    stored = (run_dir / "energy.csv").read_text()
    return {
        "integrity_ok": integrity_ok,
        "replay_ok": regenerated == stored,
        "mismatched": mismatched,
    }
