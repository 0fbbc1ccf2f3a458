import json
from pathlib import Path

import pytest

from congestflow.cli import EXIT_CONFIG, EXIT_METRIC, EXIT_OK, main

LIGHT = """
[grid]
cells = 32 32
lengths = 1.0 1.0

[model]
epsilon = 0.125
mu = 1e-4

[jko]
tau = 1e-3

[initial]
shape = disc
center = 0.5 0.5
radius = 0.25

[run]
t_final = 2e-3
log_every = 1
"""


@pytest.fixture
def light_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(LIGHT)
    return p


def _run_dir_complete(run_dir: Path):
    assert (run_dir / "config.txt").is_file()
    assert (run_dir / "energy.csv").is_file()
    assert (run_dir / "manifest.json").is_file()
    assert (run_dir / "report.json").is_file()
    assert list((run_dir / "fields").glob("rho_*.bin"))


class TestSimulate:
    def test_single_run_exit_zero(self, light_config, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["simulate", str(light_config), "--out", str(out)]) == EXIT_OK
        _run_dir_complete(out)

    def test_dry_run_echoes_without_output(self, light_config, tmp_path, capsys):
        out = tmp_path / "dry"
        assert main(["simulate", str(light_config), "--out", str(out), "--dry-run"]) == EXIT_OK
        assert not out.exists()
        assert "[grid]" in capsys.readouterr().out

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text(LIGHT.replace("epsilon = 0.125", "epsilon = nope"))
        assert main(["simulate", str(bad)]) == EXIT_CONFIG

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["simulate", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG

    def test_scale_guard_flag(self, tmp_path, capsys):
        cfg = tmp_path / "tight.cfg"
        cfg.write_text(LIGHT.replace("epsilon = 0.125", "epsilon = 0.05").replace("t_final = 2e-3", "t_final = 0.0"))
        out = tmp_path / "guarded"
        assert main(["simulate", str(cfg), "--out", str(out)]) == EXIT_CONFIG
        assert main(["--override-scale-guard", "simulate", str(cfg), "--out", str(out)]) == EXIT_OK

    def test_sweep_writes_point_dirs(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(LIGHT.replace("epsilon = 0.125", "epsilon = [0.125, 0.25]").replace("t_final = 2e-3", "t_final = 1e-3"))
        out = tmp_path / "sweep_out"
        assert main(["simulate", str(cfg), "--out", str(out)]) == EXIT_OK
        _run_dir_complete(out / "point_000")
        _run_dir_complete(out / "point_001")

    def test_thread_count_does_not_change_results(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(LIGHT.replace("epsilon = 0.125", "epsilon = [0.125, 0.25]").replace("t_final = 2e-3", "t_final = 1e-3"))
        out1 = tmp_path / "serial"
        out4 = tmp_path / "parallel"
        assert main(["--threads", "1", "simulate", str(cfg), "--out", str(out1)]) == EXIT_OK
        assert main(["--threads", "4", "simulate", str(cfg), "--out", str(out4)]) == EXIT_OK
        for point in ("point_000", "point_001"):
            a = (out1 / point / "energy.csv").read_bytes()
            b = (out4 / point / "energy.csv").read_bytes()
            assert a == b


class TestCheck:
    def test_replay_ok(self, light_config, tmp_path, capsys):
        out = tmp_path / "run"
        main(["simulate", str(light_config), "--out", str(out)])
        assert main(["check", str(out)]) == EXIT_OK

    def test_corruption_detected(self, light_config, tmp_path, capsys):
        out = tmp_path / "run"
        main(["simulate", str(light_config), "--out", str(out)])
        csv = out / "energy.csv"
        csv.write_text(csv.read_text().replace("0", "1", 1))
        assert main(["check", str(out)]) == EXIT_METRIC

    def test_missing_dir_fails(self, tmp_path, capsys):
        assert main(["check", str(tmp_path / "absent")]) != EXIT_OK


class TestDumpSchema:
    def test_valid_json_with_core_keys(self, capsys):
        assert main(["dump-schema"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["schema_version"] == 1
        assert "energy_csv_columns" in doc
        assert "exit_codes" in doc
        assert "presets" in doc

    def test_documents_all_config_sections(self, capsys):
        main(["dump-schema"])
        doc = json.loads(capsys.readouterr().out)
        for section in ("grid", "model", "jko", "initial", "run"):
            assert section in doc["config"]


class TestPreset:
    def test_unknown_preset_rejected(self, tmp_path):
        assert main(["preset", "frobnicate", "--out", str(tmp_path / "x")]) == EXIT_CONFIG

    def test_dry_run_prints_default_config(self, tmp_path, capsys):
        assert main(["preset", "contact_angle", "--dry-run"]) == EXIT_OK
        assert "[grid]" in capsys.readouterr().out

    def test_preset_with_light_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "light.cfg"
        cfg.write_text(
            LIGHT.replace("epsilon = 0.125", "epsilon = 0.125\nmu = 0.0")
            .replace("mu = 1e-4\n", "")
            .replace("t_final = 2e-3", "t_final = 2e-3")
        )
        out = tmp_path / "ed"
        code = main(["preset", "energy_descent", str(cfg), "--out", str(out)])
        assert code in (EXIT_OK, EXIT_METRIC)
        report = json.loads((out / "report.json").read_text())
        assert "metrics" in report and "passed" in report
