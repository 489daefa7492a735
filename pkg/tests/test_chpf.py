import numpy as np
import pytest

from bohmstab import PhysicalConstants, build_grid
from bohmstab.chpf import (
    KIND_COMPLEX,
    KIND_REAL,
    read_field,
    read_header,
    read_sidecar,
    write_field,
)
from bohmstab.grids import ComplexField, ScalarField


def test_real_roundtrip(tmp_path):
    g = build_grid(1, [(-2.0, 2.0)], [64])
    f = ScalarField(g, np.sin(g.axis_coords(0)))
    path = tmp_path / "f.chpf"
    write_field(path, f)
    back = read_field(path)
    assert isinstance(back, ScalarField)
    assert back.grid == g
    assert np.all(back.values == f.values)


def test_complex_roundtrip_2d(tmp_path):
    g = build_grid(2, [(-1.0, 1.0), (0.0, 3.0)], [17, 19])
    xs, ys = g.meshes()
    f = ComplexField(g, np.exp(1j * xs) * np.exp(-(ys**2)))
    path = tmp_path / "psi.chpf"
    write_field(path, f)
    back = read_field(path)
    assert isinstance(back, ComplexField)
    assert back.grid == g
    assert np.all(back.values == f.values)


def test_header_layout(tmp_path):
    g = build_grid(1, [(0.0, 1.0)], [32])
    path = tmp_path / "h.chpf"
    write_field(path, ScalarField(g, np.zeros(32)))
    raw = path.read_bytes()
    assert raw[:4] == b"CHPF"
    hdr = read_header(path)
    assert hdr["version"] == 1
    assert hdr["dim"] == 1
    assert hdr["points"] == (32,)
    assert hdr["bounds"] == [(0.0, 1.0)]
    assert hdr["kind"] == KIND_REAL
    # payload: header is 4 + 8 + 4 + 16 + 1 bytes for 1D
    assert hdr["payload_offset"] == 33
    assert len(raw) == 33 + 32 * 8

    write_field(path, ComplexField(g, np.zeros(32, complex)))
    assert read_header(path)["kind"] == KIND_COMPLEX
    assert len(path.read_bytes()) == 33 + 32 * 16


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.chpf"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        read_header(path)


def test_truncated_payload(tmp_path):
    g = build_grid(1, [(0.0, 1.0)], [32])
    path = tmp_path / "t.chpf"
    write_field(path, ScalarField(g, np.zeros(32)))
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(ValueError, match="truncated"):
        read_field(path)


def test_sidecar(tmp_path):
    g = build_grid(1, [(0.0, 1.0)], [32])
    path = tmp_path / "s.chpf"
    write_field(path, ScalarField(g, np.zeros(32)),
                constants=PhysicalConstants(hbar=2.0, mass=3.0),
                meta={"label": "test"})
    side = read_sidecar(path)
    assert side["constants"]["hbar"] == 2.0
    assert side["constants"]["mass"] == [3.0]
    assert side["provenance"]["label"] == "test"
