"""Panel renderers: each takes loaded artifacts and writes one PNG.

Rendering is deterministic: fixed Agg backend, fixed dpi, no timestamps in
the PNG metadata, fixed filenames derived from the panel and step.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formats import RunArtifacts, RunFormatError

DPI = 110

_SAVE_KWARGS = {"dpi": DPI, "metadata": {"Software": "runviz"}}

PANELS = ("density", "energy", "convergence", "contacts", "tension")


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def render_density(run: RunArtifacts, out_dir: Path) -> list[Path]:
    """One heatmap per logged snapshot, with the interface polyline overlaid."""
    written = []
    for step in run.steps:
        dump = run.field(step)
        if dump.values.ndim != 2:
            raise RunFormatError("density panel needs 2D fields")
        fig, ax = plt.subplots(figsize=(5.0, 4.2))
        lx, ly = dump.lengths
        im = ax.imshow(
            dump.values.T,
            origin="lower",
            extent=(0.0, lx, 0.0, ly),
            vmin=0.0,
            vmax=1.0,
            cmap="viridis",
        )
        curves = run.curves(step)
        for comp in curves.components:
            ax.plot(comp[:, 0], comp[:, 1], color="white", lw=1.2)
        if curves.contacts.size:
            ax.plot(curves.contacts[:, 0], curves.contacts[:, 1], "r+", ms=9)
        ax.set_title(f"density, step {step}, t={dump.time:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        fig.colorbar(im, ax=ax, shrink=0.85)
        written.append(_save(fig, out_dir / f"density_{step:06d}.png"))
    if not written:
        raise RunFormatError("no field dumps to render")
    return written


def render_energy(run: RunArtifacts, out_dir: Path) -> list[Path]:
    """Energy and its pieces against time, plus the perimeter estimate."""
    t = run.energy_series("t")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(t, run.energy_series("f_eps"), label="free energy", lw=1.5)
    ax1.plot(t, run.energy_series("j_direct"), label="interaction", lw=1.0)
    ax1.set_xlabel("t")
    ax1.set_ylabel("energy")
    ax1.legend(fontsize=8)
    ax1.set_title("energy descent")
    ax2.plot(t, run.energy_series("perimeter_estimate"), label="perimeter estimate", lw=1.2)
    ax2.plot(t, run.energy_series("mass"), label="mass", lw=1.2)
    ax2.set_xlabel("t")
    ax2.legend(fontsize=8)
    ax2.set_title("conserved / geometric")
    fig.tight_layout()
    return [_save(fig, out_dir / "energy.png")]


def render_convergence(report: dict, out_dir: Path) -> list[Path]:
    """Log-log error-vs-epsilon plot from a sweep report (j_eps + targets)."""
    if "j_eps" not in report or "epsilon" not in report:
        raise RunFormatError("report.json has no j_eps sweep to plot")
    eps = np.asarray(report["epsilon"], dtype=float)
    fig, ax = plt.subplots(figsize=(4.6, 3.8))
    for name, values in report["j_eps"].items():
        target = report.get("targets", {}).get(name)
        if target is None:
            continue
        err = np.abs(np.asarray(values, dtype=float) - float(target))
        ax.loglog(eps, np.maximum(err, 1e-16), "o-", label=f"{name} (target {target:g})")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("|J_eps - J_0|")
    ax.legend(fontsize=8)
    ax.set_title("perimeter-limit convergence")
    fig.tight_layout()
    return [_save(fig, out_dir / "convergence.png")]


def render_contacts(run: RunArtifacts, out_dir: Path) -> list[Path]:
    """Close-up of the wall contact with measured vs target angle annotated."""
    step = run.steps[-1] if run.steps else None
    if step is None:
        raise RunFormatError("no snapshots for contact panel")
    curves = run.curves(step)
    if not curves.contacts.size:
        raise RunFormatError(f"step {step} has no contact points")
    dump = run.field(step)
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    lx, ly = dump.lengths
    ax.imshow(
        dump.values.T,
        origin="lower",
        extent=(0.0, lx, 0.0, ly),
        vmin=0.0,
        vmax=1.0,
        cmap="viridis",
    )
    for comp in curves.components:
        ax.plot(comp[:, 0], comp[:, 1], color="white", lw=1.2)
    for x, y, theta, target in curves.contacts:
        ax.plot([x], [y], "r+", ms=10)
        label = f"{theta:.2f}" + ("" if np.isnan(target) else f" / {target:.2f}")
        ax.annotate(label, (x, y), textcoords="offset points", xytext=(6, 6),
                    color="red", fontsize=8)
    pad = 0.15 * max(lx, ly)
    cx = float(np.mean(curves.contacts[:, 0]))
    cy = float(np.mean(curves.contacts[:, 1]))
    ax.set_xlim(max(0.0, cx - 2 * pad), min(lx, cx + 2 * pad))
    ax.set_ylim(max(0.0, cy - pad / 2), min(ly, cy + 2 * pad))
    ax.set_title(f"contact angles, step {step} (measured / target)")
    return [_save(fig, out_dir / f"contacts_{step:06d}.png")]


def render_tension(report: dict, out_dir: Path) -> list[Path]:
    """Interface pressure against curvature with the fitted slope annotated."""
    scatter = report.get("scatter")
    if not scatter or "kappa" not in scatter or "q" not in scatter:
        raise RunFormatError("report.json has no q-vs-kappa scatter data")
    kappa = np.asarray(scatter["kappa"], dtype=float)
    q = np.asarray(scatter["q"], dtype=float)
    fig, ax = plt.subplots(figsize=(4.6, 3.8))
    ax.plot(kappa, q, ".", ms=3, alpha=0.6)
    denom = float(np.dot(kappa, kappa))
    if denom > 0:
        a = float(np.dot(kappa, q)) / denom
        ks = np.linspace(float(kappa.min()), float(kappa.max()), 50)
        label = f"fit q = {a:.3f} kappa"
        slope = report.get("slope")
        if slope is not None:
            label += f" (report slope {float(slope):.3f})"
        ax.plot(ks, a * ks, "r-", lw=1.2, label=label)
        ax.legend(fontsize=8)
    ax.set_xlabel("kappa")
    ax.set_ylabel("interface q")
    ax.set_title("surface-tension law")
    fig.tight_layout()
    return [_save(fig, out_dir / "tension.png")]
