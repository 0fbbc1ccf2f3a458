"""Run configuration: parsing, validation, sweep expansion, and echoing.

The config format is sectioned ``key = value`` text::

    [grid]
    cells = 128 128
    lengths = 1.0 1.0

    [model]
    epsilon = 0.02        # or a sweep: epsilon = [0.04, 0.02, 0.01]
    ...

All problems are collected (with line numbers) before raising, so a bad file
reports every issue at once.  Sweep values expand to the cartesian product of
one `RunConfig` per combination.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .chem import ChemParams
from .energy import EnergyParams
from .errors import ConfigError, ParameterError
from .grid import GridSpec, RobinSpec
from .jko import JKOParams

__all__ = ["RunConfig", "ConfigIssue", "parse_config", "render_config"]

#: Minimum ratio of the chemical length scale to the grid spacing.
SCALE_GUARD_RATIO = 4.0


@dataclass(frozen=True)
class ConfigIssue:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class RunConfig:
    """A fully validated single run (one sweep point)."""

    grid: GridSpec
    jko: JKOParams
    shape: str
    shape_params: dict
    t_final: float
    log_every: int
    output_dir: str
    seed: int
    scale_guard_overridden: bool = False

    @property
    def model(self) -> EnergyParams:
        return self.jko.energy


# (key, type, default) per section; type tags: f float, i int, s string,
# vf float tuple, vi int tuple, b bool.
_SCHEMA = {
    "grid": {"cells": ("vi", None), "lengths": ("vf", None)},
    "model": {
        "epsilon": ("f", None),
        "sigma": ("f", 1.0),
        "alpha": ("f", 0.0),
        "beta": ("f", 1.0),
        "mu": ("f", 0.0),
    },
    "jko": {
        "tau": ("f", 5e-4),
        "entropic_lambda": ("f", None),  # defaults to 2 h^2
        "sinkhorn_tol": ("f", 1e-9),
        "sinkhorn_max_iter": ("i", 5000),
        "outer_fixed_point_iters": ("i", 3),
    },
    "initial": {
        "shape": ("s", None),
        "center": ("vf", (0.5, 0.5)),
        "center2": ("vf", (0.75, 0.5)),
        "radius": ("f", 0.25),
        "radius2": ("f", 0.125),
        "semi_axes": ("vf", (0.3, 0.18)),
        "center_x": ("f", 0.5),
        "margin": ("f", 0.0),
        "a": ("f", 0.25),
        "b": ("f", 0.75),
        "path": ("s", ""),
        "seed": ("i", 0),
    },
    "run": {
        "t_final": ("f", None),
        "log_every": ("i", 1),
        "output_dir": ("s", ""),
        "seed": ("i", 0),
    },
}

_SHAPE_KEYS = {
    "disc": ("center", "radius"),
    "two_discs": ("center", "radius", "center2", "radius2"),
    "ellipse": ("center", "semi_axes"),
    "half_disc_on_wall": ("center_x", "radius"),
    "half_square": ("margin",),
    "interval": ("a", "b"),
    "random": ("seed",),
    "file": ("path",),
}


def _parse_scalar(raw: str, kind: str):
    if kind == "f":
        return float(raw)
    if kind == "i":
        v = float(raw)
        if v != int(v):
            raise ValueError("not an integer")
        return int(v)
    if kind == "s":
        return raw
    if kind == "b":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError("not a boolean")
    if kind in ("vf", "vi"):
        parts = raw.replace(",", " ").split()
        if not parts:
            raise ValueError("empty vector")
        elem = "f" if kind == "vf" else "i"
        return tuple(_parse_scalar(p, elem) for p in parts)
    raise ValueError(f"unknown kind {kind}")


def _tokenize(text: str):
    """Yield (line_number, tag, key, raw_value, is_sweep, sweep_items).

    ``tag`` is "@section" for a section header, "@malformed" for an
    unparseable line, and "@key" for a key assignment; tracking which section
    a key belongs to is left to the caller.
    """
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            yield lineno, "@section", stripped[1:-1].strip(), None, False, None
            continue
        if "=" not in stripped:
            yield lineno, "@malformed", stripped, None, False, None
            continue
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if raw.startswith("[") and raw.endswith("]"):
            items = [s.strip() for s in raw[1:-1].split(",") if s.strip()]
            yield lineno, "@key", key, raw, True, items
        else:
            yield lineno, "@key", key, raw, False, None


def parse_config(text: str, override_scale_guard: bool = False) -> list[RunConfig]:
    """Parse and validate config text into one RunConfig per sweep point.

    Raises ConfigError carrying every detected issue, each with its line
    number.
    """
    issues: list[ConfigIssue] = []
    values: dict[tuple[str, str], object] = {}
    sweeps: dict[tuple[str, str], tuple[int, list]] = {}
    key_lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, tag, key, raw, is_sweep, items in _tokenize(text):
        if tag == "@section":
            section = key
            if section not in _SCHEMA:
                issues.append(ConfigIssue(lineno, f"unknown section [{section}]"))
                section = None
            continue
        if tag == "@malformed":
            issues.append(ConfigIssue(lineno, f"expected 'key = value', got '{key}'"))
            continue
        if section is None:
            issues.append(ConfigIssue(lineno, f"key '{key}' outside any valid section"))
            continue
        sec = section
        schema = _SCHEMA[sec]
        if key not in schema:
            issues.append(ConfigIssue(lineno, f"unknown key '{key}' in section [{sec}]"))
            continue
        kind, _ = schema[key]
        addr = (sec, key)
        if addr in values or addr in sweeps:
            issues.append(ConfigIssue(lineno, f"duplicate key '{key}' in [{sec}]"))
            continue
        key_lines[addr] = lineno
        if is_sweep:
            if kind not in ("f", "i"):
                issues.append(
                    ConfigIssue(lineno, f"sweep lists are only allowed on numbers, not '{key}'")
                )
                continue
            try:
                sweeps[addr] = (lineno, [_parse_scalar(s, kind) for s in items])
            except ValueError as exc:
                issues.append(ConfigIssue(lineno, f"bad sweep value for '{key}': {exc}"))
        else:
            try:
                values[addr] = _parse_scalar(raw, kind)
            except ValueError as exc:
                issues.append(
                    ConfigIssue(lineno, f"value '{raw}' for '{key}' is not a valid {kind}: {exc}")
                )

    # Fill defaults and flag missing required keys.
    for sec, schema in _SCHEMA.items():
        for key, (kind, default) in schema.items():
            addr = (sec, key)
            if addr in values or addr in sweeps:
                continue
            if default is None and not (sec == "jko" and key == "entropic_lambda"):
                if sec == "initial" and key != "shape":
                    continue  # geometry keys are only required per shape
                issues.append(ConfigIssue(0, f"missing required key '{key}' in [{sec}]"))
            else:
                values[addr] = default

    if issues:
        raise ConfigError(sorted(issues, key=lambda i: i.line))

    sweep_addrs = sorted(sweeps)
    combos = itertools.product(*(sweeps[a][1] for a in sweep_addrs)) if sweep_addrs else [()]
    configs = []
    for combo in combos:
        point = dict(values)
        for addr, val in zip(sweep_addrs, combo):
            point[addr] = val
        try:
            configs.append(_build(point, override_scale_guard, key_lines))
        except ConfigError as exc:
            issues.extend(exc.issues)
        except ParameterError as exc:
            issues.append(ConfigIssue(0, str(exc)))
    if issues:
        unique = {(i.line, i.message): i for i in issues}
        raise ConfigError(sorted(unique.values(), key=lambda i: (i.line, i.message)))
    return configs


def _build(point, override_scale_guard, key_lines) -> RunConfig:
    local: list[ConfigIssue] = []

    def line(sec, key):
        return key_lines.get((sec, key), 0)

    cells = point[("grid", "cells")]
    lengths = point[("grid", "lengths")]
    if len(cells) != len(lengths):
        local.append(ConfigIssue(line("grid", "lengths"), "cells and lengths dimensions differ"))
        raise ConfigError(local)
    try:
        grid = GridSpec(tuple(cells), tuple(float(x) for x in lengths))
    except ParameterError as exc:
        local.append(ConfigIssue(line("grid", "cells"), str(exc)))
        raise ConfigError(local) from None

    eps = point[("model", "epsilon")]
    hmax = max(grid.spacing)
    if eps is not None and 0 < eps < SCALE_GUARD_RATIO * hmax and not override_scale_guard:
        local.append(
            ConfigIssue(
                line("model", "epsilon"),
                f"epsilon = {eps} violates the resolution guard epsilon >= "
                f"{SCALE_GUARD_RATIO}*h = {SCALE_GUARD_RATIO * hmax:.6g} "
                "(pass --override-scale-guard to proceed)",
            )
        )

    def guard(sec, key, build):
        try:
            return build()
        except ParameterError as exc:
            local.append(ConfigIssue(line(sec, key), str(exc)))
            return None

    robin = guard(
        "model",
        "alpha",
        lambda: RobinSpec(point[("model", "alpha")], point[("model", "beta")]),
    )
    chem = robin and guard(
        "model",
        "epsilon",
        lambda: ChemParams(epsilon=eps, sigma=point[("model", "sigma")], robin=robin),
    )
    energy = chem and guard(
        "model", "mu", lambda: EnergyParams(chem=chem, mu=point[("model", "mu")])
    )
    lam = point.get(("jko", "entropic_lambda"))
    if lam is None:
        lam = 2.0 * hmax**2
    jko = energy and guard(
        "jko",
        "tau",
        lambda: JKOParams(
            tau=point[("jko", "tau")],
            entropic_lambda=lam,
            sinkhorn_tol=point[("jko", "sinkhorn_tol")],
            sinkhorn_max_iter=point[("jko", "sinkhorn_max_iter")],
            outer_fixed_point_iters=point[("jko", "outer_fixed_point_iters")],
            energy=energy,
        ),
    )

    shape = point[("initial", "shape")]
    if shape not in _SHAPE_KEYS:
        local.append(
            ConfigIssue(
                line("initial", "shape"),
                f"unknown shape '{shape}' (choose from {sorted(_SHAPE_KEYS)})",
            )
        )
        shape_params = {}
    else:
        shape_params = {}
        for key in _SHAPE_KEYS[shape]:
            val = point.get(("initial", key), _SCHEMA["initial"][key][1])
            shape_params[key] = val
        if shape == "file" and not shape_params.get("path"):
            local.append(ConfigIssue(line("initial", "path"), "shape 'file' requires a path"))

    t_final = point[("run", "t_final")]
    if t_final is not None and t_final < 0:
        # t_final = 0 is allowed: evaluate the initial state without stepping.
        local.append(ConfigIssue(line("run", "t_final"), "t_final must be nonnegative"))
    log_every = point[("run", "log_every")]
    if log_every is not None and log_every < 1:
        local.append(ConfigIssue(line("run", "log_every"), "log_every must be at least 1"))

    if local:
        raise ConfigError(local)
    return RunConfig(
        grid=grid,
        jko=jko,
        shape=shape,
        shape_params=shape_params,
        t_final=t_final,
        log_every=log_every,
        output_dir=point[("run", "output_dir")],
        seed=point[("run", "seed")],
        scale_guard_overridden=override_scale_guard,
    )


def render_config(cfg: RunConfig) -> str:
    """Canonical config text for one run, suitable for echoing and hashing."""
    chem = cfg.model.chem
    lines = [
        "[grid]",
        "cells = " + " ".join(str(c) for c in cfg.grid.cells),
        "lengths = " + " ".join(repr(x) for x in cfg.grid.lengths),
        "",
        "[model]",
        f"epsilon = {chem.epsilon!r}",
        f"sigma = {chem.sigma!r}",
        f"alpha = {chem.robin.alpha!r}",
        f"beta = {chem.robin.beta!r}",
        f"mu = {cfg.model.mu!r}",
        "",
        "[jko]",
        f"tau = {cfg.jko.tau!r}",
        f"entropic_lambda = {cfg.jko.entropic_lambda!r}",
        f"sinkhorn_tol = {cfg.jko.sinkhorn_tol!r}",
        f"sinkhorn_max_iter = {cfg.jko.sinkhorn_max_iter}",
        f"outer_fixed_point_iters = {cfg.jko.outer_fixed_point_iters}",
        "",
        "[initial]",
        f"shape = {cfg.shape}",
    ]
    for key in sorted(cfg.shape_params):
        val = cfg.shape_params[key]
        if isinstance(val, tuple):
            lines.append(f"{key} = " + " ".join(repr(float(x)) for x in val))
        else:
            lines.append(f"{key} = {val!r}" if not isinstance(val, str) else f"{key} = {val}")
    lines += [
        "",
        "[run]",
        f"t_final = {cfg.t_final!r}",
        f"log_every = {cfg.log_every}",
        f"output_dir = {cfg.output_dir}",
        f"seed = {cfg.seed}",
        "",
    ]
    return "\n".join(lines)
