"""Binary field snapshot format.

Layout (all little-endian):
    magic "CHPF" | version u32 | dim u32 | points u32 * dim |
    bounds f64 * (2*dim) | payload kind u8 (0 real, 1 complex) |
    values f64 row-major (re,im interleaved when complex)

A JSON sidecar (same path + ".json") carries constants and provenance.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .constants import PhysicalConstants
from .grids import ComplexField, ScalarField, SpatialGrid, build_grid

MAGIC = b"CHPF"
VERSION = 1
KIND_REAL = 0
KIND_COMPLEX = 1


def write_field(path, field, constants: PhysicalConstants = None, meta: dict = None):
    """Write a field snapshot plus its JSON sidecar."""
    path = Path(path)
    grid = field.grid
    is_complex = isinstance(field, ComplexField)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, grid.dim))
        fh.write(struct.pack(f"<{grid.dim}I", *grid.points))
        flat_bounds = [v for b in grid.bounds for v in b]
        fh.write(struct.pack(f"<{2 * grid.dim}d", *flat_bounds))
        fh.write(struct.pack("<B", KIND_COMPLEX if is_complex else KIND_REAL))
        if is_complex:
            inter = np.empty(grid.size * 2)
            inter[0::2] = field.values.real.ravel(order="C")
            inter[1::2] = field.values.imag.ravel(order="C")
            fh.write(inter.astype("<f8").tobytes())
        else:
            fh.write(field.values.ravel(order="C").astype("<f8").tobytes())
    sidecar = {
        "constants": (constants or PhysicalConstants()).to_dict(),
        "provenance": meta or {},
    }
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_header(path) -> dict:
    """Parse the fixed-size header of a snapshot."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        if dim not in (1, 2):
            raise ValueError(f"{path}: bad dim {dim}")
        points = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        flat = struct.unpack(f"<{2 * dim}d", fh.read(16 * dim))
        bounds = [(flat[2 * a], flat[2 * a + 1]) for a in range(dim)]
        (kind,) = struct.unpack("<B", fh.read(1))
        offset = fh.tell()
    return {
        "version": version,
        "dim": dim,
        "points": points,
        "bounds": bounds,
        "kind": kind,
        "payload_offset": offset,
    }


def read_field(path):
    """Read a snapshot back into a ScalarField or ComplexField."""
    hdr = read_header(path)
    grid = build_grid(hdr["dim"], hdr["bounds"], hdr["points"])
    count = grid.size * (2 if hdr["kind"] == KIND_COMPLEX else 1)
    with open(path, "rb") as fh:
        fh.seek(hdr["payload_offset"])
        raw = np.frombuffer(fh.read(count * 8), dtype="<f8")
    if raw.size != count:
        raise ValueError(f"{path}: truncated payload")
    if hdr["kind"] == KIND_COMPLEX:
        vals = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
        return ComplexField(grid, vals)
    return ScalarField(grid, raw.reshape(grid.shape))


def read_sidecar(path) -> dict:
    side = Path(path)
    side = side.with_suffix(side.suffix + ".json")
    if not side.exists():
        return {}
    with open(side) as fh:
        return json.load(fh)
