"""External potentials sampled on grids.

Supported families: free, harmonic, quartic double well, Gaussian barrier,
and tabulated fields.  An optional periodic drive adds eps * x * cos(Omega t)
along the first axis.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import PhysicalConstants
from .grids import ScalarField, SpatialGrid

KINDS = ("free", "harmonic", "double_well", "barrier", "tabulated")


@dataclass(frozen=True)
class DriveSpec:
    """Periodic linear drive eps * x * cos(Omega t)."""

    amplitude: float
    omega: float

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and np.isfinite(self.omega)):
            raise ValueError("drive parameters must be finite")
        if self.omega <= 0:
            raise ValueError("drive angular frequency must be > 0")

    def to_dict(self):
        return {"amplitude": self.amplitude, "omega": self.omega}


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    omega: tuple = ()          # harmonic, per axis
    center: tuple = ()         # harmonic / barrier center
    a: float = 0.0             # double well quartic coefficient
    b: float = 0.0             # double well quadratic coefficient
    height: float = 0.0        # barrier
    width: float = 0.0         # barrier
    table: object = None       # tabulated ScalarField
    drive: DriveSpec = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        for name in ("a", "b", "height", "width"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.kind == "harmonic" and any(w <= 0 for w in self.omega):
            raise ValueError("harmonic omega must be > 0")
        if self.kind == "double_well" and (self.a <= 0 or self.b <= 0):
            raise ValueError("double well requires a > 0 and b > 0")

    # -- constructors ------------------------------------------------------

    @classmethod
    def free(cls, drive=None):
        return cls(kind="free", drive=drive)

    @classmethod
    def harmonic(cls, omega, center=None, drive=None):
        omega = tuple(float(w) for w in np.atleast_1d(omega))
        if center is None:
            center = (0.0,) * len(omega)
        center = tuple(float(c) for c in np.atleast_1d(center))
        return cls(kind="harmonic", omega=omega, center=center, drive=drive)

    @classmethod
    def double_well(cls, a, b, drive=None):
        return cls(kind="double_well", a=float(a), b=float(b), drive=drive)

    @classmethod
    def barrier(cls, height, width, center=0.0, drive=None):
        return cls(
            kind="barrier",
            height=float(height),
            width=float(width),
            center=(float(center),),
            drive=drive,
        )

    @classmethod
    def tabulated(cls, table: ScalarField, drive=None):
        return cls(kind="tabulated", table=table, drive=drive)

    @property
    def time_dependent(self) -> bool:
        return self.drive is not None and self.drive.amplitude != 0.0

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "harmonic":
            d["omega"] = list(self.omega)
            d["center"] = list(self.center)
        elif self.kind == "double_well":
            d["a"] = self.a
            d["b"] = self.b
        elif self.kind == "barrier":
            d["height"] = self.height
            d["width"] = self.width
            d["center"] = self.center[0]
        elif self.kind == "tabulated":
            d["table"] = "inline"
        if self.drive is not None:
            d["drive"] = self.drive.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict, table: ScalarField = None) -> "PotentialSpec":
        drive = None
        if "drive" in d and d["drive"]:
            drive = DriveSpec(d["drive"]["amplitude"], d["drive"]["omega"])
        kind = d["kind"]
        if kind == "free":
            return cls.free(drive=drive)
        if kind == "harmonic":
            return cls.harmonic(d["omega"], d.get("center"), drive=drive)
        if kind == "double_well":
            return cls.double_well(d["a"], d["b"], drive=drive)
        if kind == "barrier":
            return cls.barrier(d["height"], d["width"], d.get("center", 0.0), drive=drive)
        if kind == "tabulated":
            if table is None:
                raise ValueError("tabulated potential needs a table field")
            return cls.tabulated(table, drive=drive)
        raise ValueError(f"unknown potential kind {kind!r}")


def sample_potential(
    spec: PotentialSpec,
    grid: SpatialGrid,
    t: float = 0.0,
    constants: PhysicalConstants = None,
) -> ScalarField:
    """Evaluate the potential at every grid point at time t."""
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    constants = constants or PhysicalConstants()
    meshes = grid.meshes()
    if spec.kind == "free":
        u = np.zeros(grid.shape)
    elif spec.kind == "harmonic":
        u = np.zeros(grid.shape)
        for a, xs in enumerate(meshes):
            m = constants.mass_for_axis(a)
            u += 0.5 * m * spec.omega[a] ** 2 * (xs - spec.center[a]) ** 2
    elif spec.kind == "double_well":
        x = meshes[0]
        u = spec.a * x**4 / 4.0 - spec.b * x**2 / 2.0
    elif spec.kind == "barrier":
        x = meshes[0]
        u = spec.height * np.exp(-((x - spec.center[0]) ** 2) / (2.0 * spec.width**2))
    elif spec.kind == "tabulated":
        if spec.table.grid != grid:
            raise ValueError("tabulated potential grid does not match target grid")
        u = spec.table.values.copy()
    else:  # pragma: no cover
        raise ValueError(spec.kind)
    if spec.drive is not None and spec.drive.amplitude != 0.0:
        u = u + spec.drive.amplitude * meshes[0] * np.cos(spec.drive.omega * t)
    return ScalarField(grid, u)
