"""Command line entry points: render one run, or compare several."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import panels
from .formats import (
    RunFormatError,
    SchemaMismatchError,
    load_preset_report,
    load_run,
)

EXIT_OK = 0
EXIT_ERROR = 1


def render_run(run_dir, out_dir=None, wanted=None) -> list[Path]:
    """Render the requested panels for one run directory.

    With no explicit panel list, renders whichever panels the directory has
    data for; an explicitly requested panel that cannot be rendered raises.
    """
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir / "plots"
    explicit = wanted is not None
    wanted = tuple(wanted) if wanted else panels.PANELS
    for name in wanted:
        if name not in panels.PANELS:
            raise RunFormatError(
                f"unknown panel {name!r}; available: {', '.join(panels.PANELS)}"
            )

    run = load_run(run_dir)
    # Sweep-level report (convergence / scatter data) may sit one level up.
    report = run.report
    if report is None or ("j_eps" not in report and "scatter" not in report):
        parent_report = run_dir.parent / "report.json"
        if parent_report.is_file():
            report = load_preset_report(run_dir.parent)

    written = []
    for name in wanted:
        try:
            if name == "density":
                written += panels.render_density(run, out_dir)
            elif name == "energy":
                written += panels.render_energy(run, out_dir)
            elif name == "contacts":
                written += panels.render_contacts(run, out_dir)
            elif name == "convergence":
                written += panels.render_convergence(report or {}, out_dir)
            elif name == "tension":
                written += panels.render_tension(report or {}, out_dir)
        except RunFormatError:
            if explicit:
                raise
    if not written:
        raise RunFormatError(f"{run_dir}: no renderable panels")
    return written


def compare_runs(run_dirs, out_dir) -> list[Path]:
    """Overlay energy curves and final interfaces from several runs."""
    import matplotlib.pyplot as plt

    runs = [load_run(d) for d in run_dirs]
    if len(runs) < 2:
        raise RunFormatError("need at least two run directories to compare")
    out_dir = Path(out_dir)

    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    for run in runs:
        ax.plot(
            run.energy_series("t"),
            run.energy_series("f_eps"),
            lw=1.3,
            label=run.path.name or str(run.path),
        )
    ax.set_xlabel("t")
    ax.set_ylabel("free energy")
    ax.legend(fontsize=8)
    ax.set_title("energy comparison")
    fig.tight_layout()
    written = [panels._save(fig, out_dir / "compare_energy.png")]

    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    any_curve = False
    for run in runs:
        if not run.steps:
            continue
        curves = run.curves(run.steps[-1])
        for i, comp in enumerate(curves.components):
            ax.plot(
                comp[:, 0], comp[:, 1], lw=1.2,
                label=run.path.name if i == 0 else None,
            )
            any_curve = True
    if any_curve:
        ax.set_aspect("equal")
        ax.legend(fontsize=8)
        ax.set_title("final interfaces")
        fig.tight_layout()
        written.append(panels._save(fig, out_dir / "compare_interfaces.png"))
    else:
        plt.close(fig)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="runviz", description="Render plots from simulation run directories."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render panels for one run directory")
    p_render.add_argument("run_dir", type=Path)
    p_render.add_argument("--panels", nargs="+", default=None, choices=panels.PANELS)
    p_render.add_argument("--out", type=Path, default=None)

    p_cmp = sub.add_parser("compare", help="overlay plots from several runs")
    p_cmp.add_argument("run_dirs", nargs="+", type=Path)
    p_cmp.add_argument("--out", type=Path, required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            written = render_run(args.run_dir, args.out, args.panels)
        else:
            written = compare_runs(args.run_dirs, args.out)
    except SchemaMismatchError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (RunFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in written:
        print(path)
    return EXIT_OK


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
