import numpy as np
import pytest

from congestflow.errors import DomainError
from congestflow.grid import GridSpec, ScalarField
from congestflow.io import (
    read_field_binary,
    read_field_text,
    write_field_binary,
    write_field_text,
)


@pytest.fixture
def field2d():
    g = GridSpec((8, 12), (1.0, 1.5))
    rng = np.random.default_rng(3)
    return ScalarField(g, rng.uniform(size=g.shape))


def test_text_round_trip_2d(tmp_path, field2d):
    path = tmp_path / "f.txt"
    write_field_text(field2d, path)
    back = read_field_text(path)
    assert back.grid == field2d.grid
    assert np.array_equal(back.values, field2d.values)


def test_text_round_trip_1d(tmp_path):
    g = GridSpec((17,), (2.0,))
    f = ScalarField(g, np.linspace(0, 1, 17))
    path = tmp_path / "f.txt"
    write_field_text(f, path)
    back = read_field_text(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)


def test_text_header_format(tmp_path, field2d):
    path = tmp_path / "f.txt"
    write_field_text(field2d, path)
    header = path.read_text().splitlines()[0].split()
    assert header[0] == "grid"
    assert header[1] == "2"
    assert header[2:4] == ["8", "12"]


def test_binary_round_trip_with_sidecar(tmp_path, field2d):
    path = tmp_path / "f.bin"
    write_field_binary(field2d, path, time=0.25, params={"epsilon": 0.1})
    back, sidecar = read_field_binary(path)
    assert np.array_equal(back.values, field2d.values)
    assert sidecar["time"] == 0.25
    assert sidecar["params"]["epsilon"] == 0.1


def test_binary_size_mismatch_detected(tmp_path, field2d):
    path = tmp_path / "f.bin"
    write_field_binary(field2d, path)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(DomainError):
        read_field_binary(path)


def test_text_missing_header_rejected(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("1.0\n2.0\n")
    with pytest.raises(DomainError):
        read_field_text(path)
