"""Physical constants carried explicitly through every computation."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PhysicalConstants:
    """Planck constant and particle mass, natural units by default.

    ``mass`` may be a scalar (equal masses on all axes) or a per-axis tuple.
    """

    hbar: float = 1.0
    mass: tuple = field(default=(1.0,))

    def __init__(self, hbar: float = 1.0, mass=1.0):
        if not np.isfinite(hbar) or hbar <= 0:
            raise ValueError(f"hbar must be finite and > 0, got {hbar}")
        masses = tuple(float(m) for m in np.atleast_1d(mass))
        if not all(np.isfinite(m) and m > 0 for m in masses):
            raise ValueError(f"all masses must be finite and > 0, got {masses}")
        object.__setattr__(self, "hbar", float(hbar))
        object.__setattr__(self, "mass", masses)

    def mass_for_axis(self, axis: int) -> float:
        if len(self.mass) == 1:
            return self.mass[0]
        return self.mass[axis]

    @property
    def scalar_mass(self) -> float:
        """Single mass value; raises if masses differ between axes."""
        if len(set(self.mass)) != 1:
            raise ValueError("per-axis masses differ; no single scalar mass")
        return self.mass[0]

    def to_dict(self) -> dict:
        return {"hbar": self.hbar, "mass": list(self.mass)}

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalConstants":
        return cls(hbar=d.get("hbar", 1.0), mass=d.get("mass", 1.0))


NATURAL = PhysicalConstants()
