import pytest

from congestflow.config import parse_config, render_config
from congestflow.errors import ConfigError

BASE = """
[grid]
cells = 64 64
lengths = 1.0 1.0

[model]
epsilon = 0.0625

[initial]
shape = disc
center = 0.5 0.5
radius = 0.25

[run]
t_final = 0.001
"""


def test_single_point_parses():
    (cfg,) = parse_config(BASE)
    assert cfg.grid.cells == (64, 64)
    assert cfg.model.chem.epsilon == 0.0625
    assert cfg.shape == "disc"
    assert cfg.t_final == 0.001


def test_defaults_applied():
    (cfg,) = parse_config(BASE)
    assert cfg.model.chem.sigma == 1.0
    assert cfg.model.chem.robin.alpha == 0.0
    assert cfg.model.chem.robin.beta == 1.0
    assert cfg.jko.tau == 5e-4
    assert cfg.log_every == 1
    assert cfg.seed == 0


def test_default_entropic_lambda_is_two_h_squared():
    (cfg,) = parse_config(BASE)
    h = 1.0 / 64
    assert cfg.jko.entropic_lambda == pytest.approx(2 * h * h)


def test_sweep_expansion_cartesian():
    text = BASE.replace("epsilon = 0.0625", "epsilon = [0.0625, 0.125]\nsigma = [1.0, 2.0, 4.0]")
    cfgs = parse_config(text)
    assert len(cfgs) == 6
    pairs = {(c.model.chem.epsilon, c.model.chem.sigma) for c in cfgs}
    assert len(pairs) == 6


def test_sweep_order_is_deterministic():
    text = BASE.replace("epsilon = 0.0625", "epsilon = [0.0625, 0.125]")
    a = [c.model.chem.epsilon for c in parse_config(text)]
    b = [c.model.chem.epsilon for c in parse_config(text)]
    assert a == b == [0.0625, 0.125]


def test_missing_required_key_reported():
    text = BASE.replace("epsilon = 0.0625", "")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("epsilon" in str(i) for i in exc.value.issues)


def test_all_errors_collected_with_line_numbers():
    text = "\n".join(
        [
            "[grid]",
            "cells = 64 nope",
            "lengths = 1.0 1.0",
            "[model]",
            "epsilon = banana",
            "[initial]",
            "shape = disc",
            "[run]",
            "t_final = 0.001",
        ]
    )
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    issues = exc.value.issues
    assert len(issues) >= 2
    text_all = " ".join(str(i) for i in issues)
    assert "nope" in text_all
    assert "banana" in text_all
    lined = [i for i in issues if "not a valid" in i.message]
    assert lined and all(i.line > 0 for i in lined)


def test_unknown_shape_reported():
    with pytest.raises(ConfigError) as exc:
        parse_config(BASE.replace("shape = disc", "shape = dodecahedron"))
    assert any("dodecahedron" in str(i) for i in exc.value.issues)


def test_unknown_key_and_section_reported():
    text = BASE + "\n[run]\nwibble = 3\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("wibble" in str(i) for i in exc.value.issues)


def test_scale_guard_trips():
    text = BASE.replace("epsilon = 0.0625", "epsilon = 0.01")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("epsilon" in str(i) for i in exc.value.issues)


def test_scale_guard_override():
    text = BASE.replace("epsilon = 0.0625", "epsilon = 0.01")
    (cfg,) = parse_config(text, override_scale_guard=True)
    assert cfg.scale_guard_overridden


def test_negative_epsilon_rejected_even_with_override():
    text = BASE.replace("epsilon = 0.0625", "epsilon = -1.0")
    with pytest.raises(ConfigError):
        parse_config(text, override_scale_guard=True)


def test_t_final_zero_allowed_negative_rejected():
    (cfg,) = parse_config(BASE.replace("t_final = 0.001", "t_final = 0.0"))
    assert cfg.t_final == 0.0
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("t_final = 0.001", "t_final = -0.001"))


def test_render_round_trip():
    (cfg,) = parse_config(BASE)
    echoed = render_config(cfg)
    (cfg2,) = parse_config(echoed)
    assert cfg2 == cfg
    assert render_config(cfg2) == echoed


def test_render_round_trip_odd_floats():
    text = BASE.replace("t_final = 0.001", "t_final = 0.30000000000000004")
    (cfg,) = parse_config(text)
    (cfg2,) = parse_config(render_config(cfg))
    assert cfg2.t_final == cfg.t_final


def test_sweep_point_failures_carry_line_numbers():
    text = BASE.replace("epsilon = 0.0625", "epsilon = [0.0625, -2.0]")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any(i.line > 0 for i in exc.value.issues)


def test_comments_and_blank_lines_ignored():
    text = BASE.replace("[model]", "# leading comment\n[model]")
    text = text.replace("epsilon = 0.0625", "epsilon = 0.0625  # trailing comment")
    (cfg,) = parse_config(text)
    assert cfg.model.chem.epsilon == 0.0625
