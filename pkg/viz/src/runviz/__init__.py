"""Offline rendering of simulation run directories."""

from .cli import compare_runs, main, render_run
from .formats import (
    CurveSet,
    FieldDump,
    RunArtifacts,
    RunFormatError,
    SchemaMismatchError,
    SUPPORTED_SCHEMA,
    load_preset_report,
    load_run,
)
from .panels import PANELS

__version__ = "0.1.0"

__all__ = [
    "CurveSet",
    "FieldDump",
    "PANELS",
    "RunArtifacts",
    "RunFormatError",
    "SchemaMismatchError",
    "SUPPORTED_SCHEMA",
    "compare_runs",
    "load_preset_report",
    "load_run",
    "main",
    "render_run",
]
