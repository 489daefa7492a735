"""Shared fixtures and closed-form oracles used across the test suite."""

import numpy as np
import pytest

from bohmstab import PhysicalConstants, PotentialSpec, build_grid
from bohmstab.grids import ComplexField, normalize
from bohmstab.tdse import evolve, stationary_states


# -- analytic oracles (independent of the implementation under test) -----------


def ho_eigenstate_exact(n, x):
    """Harmonic-oscillator eigenfunctions, hbar = m = omega = 1."""
    from scipy.special import eval_hermite
    from math import factorial

    norm = (1.0 / np.sqrt(2.0**n * factorial(n))) * np.pi**-0.25
    return norm * eval_hermite(n, x) * np.exp(-0.5 * x * x)


def free_gaussian_exact(x, t, sigma0=1.0, hbar=1.0, mass=1.0):
    """Spreading Gaussian: returns (psi, A, S, v)."""
    tau = hbar * t / (2.0 * mass * sigma0**2)
    sig2 = sigma0**2 * (1.0 + tau**2)
    a = (2.0 * np.pi * sig2) ** -0.25 * np.exp(-(x**2) / (4.0 * sig2))
    s = hbar * (x**2 * tau / (4.0 * sigma0**2 * (1.0 + tau**2))
                - 0.5 * np.arctan(tau))
    v = x * tau * hbar / (2.0 * mass * sigma0**2 * (1.0 + tau**2))
    return a * np.exp(1j * s / hbar), a, s, v


def free_gaussian_width(t, sigma0=1.0, hbar=1.0, mass=1.0):
    return sigma0 * np.sqrt(1.0 + (hbar * t / (2.0 * mass * sigma0**2)) ** 2)


# -- shared expensive fixtures ---------------------------------------------------


@pytest.fixture(scope="session")
def ho_setup():
    """HO spectrum on the acceptance grid [-12, 12] x 1201."""
    grid = build_grid(1, [(-12.0, 12.0)], [1201])
    spectrum = stationary_states(grid, PotentialSpec.harmonic(1.0), 4)
    return grid, spectrum


@pytest.fixture(scope="session")
def gaussian_record():
    """Free Gaussian (sigma0 = 1) evolved to t = 2, frames every 0.05."""
    grid = build_grid(1, [(-30.0, 30.0)], [3001])
    x = grid.axis_coords(0)
    psi0 = normalize(ComplexField(grid, np.exp(-x**2 / 4.0).astype(complex)))
    return evolve(psi0, PotentialSpec.free(), dt=0.002, n_steps=1000, frame_stride=25)


@pytest.fixture()
def natural():
    return PhysicalConstants()
