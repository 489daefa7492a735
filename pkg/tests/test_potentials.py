import numpy as np
import pytest
from scipy.optimize import brentq

from bohmstab import PhysicalConstants, PotentialSpec, build_grid
from bohmstab.grids import ScalarField
from bohmstab.potentials import DriveSpec, sample_potential


def test_harmonic_minimum_and_value():
    g = build_grid(1, [(-4.0, 4.0)], [33])
    u = sample_potential(PotentialSpec.harmonic(1.0), g).values
    x = g.axis_coords(0)
    assert u[np.argmin(np.abs(x))] == 0.0
    k2 = np.argmin(np.abs(x - 2.0))
    assert abs(u[k2] - 2.0) < 1e-12  # 0.5 * m * w^2 * x^2 at x = 2


def test_double_well_stationary_points():
    # oracle: roots of U'(x) = x^3 - x by bracketing
    spec = PotentialSpec.double_well(1.0, 1.0)
    du = lambda x: spec.a * x**3 - spec.b * x
    roots = [brentq(du, -2.0, -0.5), brentq(du, -0.1, 0.1), brentq(du, 0.5, 2.0)]
    assert np.allclose(roots, [-1.0, 0.0, 1.0], atol=1e-12)
    g = build_grid(1, [(-2.0, 2.0)], [401])
    u = sample_potential(spec, g).values
    x = g.axis_coords(0)
    for r, val in [(-1.0, -0.25), (0.0, 0.0), (1.0, -0.25)]:
        assert abs(u[np.argmin(np.abs(x - r))] - val) < 1e-12


def test_drive_term():
    g = build_grid(1, [(-4.0, 4.0)], [33])
    spec = PotentialSpec.harmonic(1.0, drive=DriveSpec(amplitude=0.3, omega=2.0))
    x = g.axis_coords(0)
    u0 = sample_potential(spec, g, t=0.0).values
    base = sample_potential(PotentialSpec.harmonic(1.0), g).values
    assert np.allclose(u0 - base, 0.3 * x)
    t_quarter = np.pi / 4.0  # cos(2t) = 0
    uq = sample_potential(spec, g, t=t_quarter).values
    assert np.max(np.abs(uq - base)) < 1e-15


def test_barrier_profile():
    g = build_grid(1, [(-4.0, 4.0)], [81])
    u = sample_potential(PotentialSpec.barrier(2.0, 0.5, center=1.0), g).values
    x = g.axis_coords(0)
    k = np.argmin(np.abs(x - 1.0))
    assert abs(u[k] - 2.0) < 1e-12
    assert u[0] < 1e-6


def test_tabulated_roundtrip_and_mismatch():
    g = build_grid(1, [(-1.0, 1.0)], [33])
    table = ScalarField(g, g.axis_coords(0) ** 4)
    spec = PotentialSpec.tabulated(table)
    assert np.all(sample_potential(spec, g).values == table.values)
    g2 = build_grid(1, [(-1.0, 1.0)], [65])
    with pytest.raises(ValueError, match="grid"):
        sample_potential(spec, g2)


def test_parameter_validation():
    with pytest.raises(ValueError):
        PotentialSpec.harmonic(-1.0)
    with pytest.raises(ValueError):
        PotentialSpec.double_well(0.0, 1.0)
    with pytest.raises(ValueError):
        PotentialSpec.double_well(1.0, -0.2)
    with pytest.raises(ValueError):
        DriveSpec(amplitude=np.inf, omega=1.0)


def test_nonfinite_time_rejected():
    g = build_grid(1, [(-1.0, 1.0)], [33])
    with pytest.raises(ValueError, match="finite"):
        sample_potential(PotentialSpec.free(), g, t=np.nan)


def test_per_axis_masses_in_harmonic():
    g = build_grid(2, [(-2.0, 2.0), (-2.0, 2.0)], [17, 17])
    constants = PhysicalConstants(mass=(1.0, 4.0))
    u = sample_potential(PotentialSpec.harmonic((1.0, 1.0)), g,
                         constants=constants).values
    xs, ys = g.meshes()
    expected = 0.5 * xs**2 + 2.0 * ys**2
    assert np.max(np.abs(u - expected)) < 1e-12
