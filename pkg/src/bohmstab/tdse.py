"""Stationary states and time evolution of the wavefunction.

The discrete Hamiltonian H = -(hbar^2/2m) Lap + U uses the same interior
stencil as the field operators in :mod:`bohmstab.grids`, with Dirichlet
boundaries realized by an odd extension across the edge (exact for
eigenfunctions, which have psi'' = 0 at a Dirichlet boundary).  Evolution is
Crank-Nicolson: unconditionally stable, exactly norm-preserving for a
time-independent potential; driven potentials are evaluated at the step
midpoint.  In 2D the Cayley step is Strang-split per axis so unitarity is
preserved to round-off there too.
"""

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import chpf
from .constants import PhysicalConstants
from .errors import NumericsError
from .grids import ComplexField, SpatialGrid, gradient, norm_sq
from .potentials import PotentialSpec, sample_potential

BOUNDARY_GUARD = 1e-6


@dataclass
class SpectrumResult:
    """Lowest eigenpairs of the discrete Hamiltonian, energies ascending."""

    energies: list
    states: list  # ComplexField, quadrature-normalized, real up to phase


@dataclass
class EvolutionRecord:
    """Recorded frames of a Crank-Nicolson run."""

    times: np.ndarray
    frames: list  # ComplexField per recorded time
    dt: float
    frame_stride: int
    potential: PotentialSpec
    constants: PhysicalConstants

    @property
    def grid(self) -> SpatialGrid:
        return self.frames[0].grid

    @property
    def frame_dt(self) -> float:
        return self.dt * self.frame_stride

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for k, frame in enumerate(self.frames):
            chpf.write_field(
                directory / f"frame_{k:05d}.chpf",
                frame,
                constants=self.constants,
                meta={"t": float(self.times[k]), "frame": k},
            )
        manifest = {
            "times": [float(t) for t in self.times],
            "dt": self.dt,
            "frame_stride": self.frame_stride,
            "potential": self.potential.to_dict(),
            "constants": self.constants.to_dict(),
            "n_frames": len(self.frames),
        }
        with open(directory / "record.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, directory) -> "EvolutionRecord":
        directory = Path(directory)
        with open(directory / "record.json") as fh:
            manifest = json.load(fh)
        frames = [
            chpf.read_field(directory / f"frame_{k:05d}.chpf")
            for k in range(manifest["n_frames"])
        ]
        return cls(
            times=np.asarray(manifest["times"]),
            frames=frames,
            dt=manifest["dt"],
            frame_stride=manifest["frame_stride"],
            potential=PotentialSpec.from_dict(manifest["potential"]),
            constants=PhysicalConstants.from_dict(manifest["constants"]),
        )


# -- discrete Hamiltonian ----------------------------------------------------


def _kinetic_bands(n_interior: int, h: float, hbar: float, mass: float):
    """Diagonal and off-diagonal kinetic bands on interior points.

    Interior rows are the 5-point second-derivative stencil; the first and
    last rows use its odd extension across the Dirichlet boundary, which
    keeps the matrix symmetric.
    """
    c = hbar * hbar / (2.0 * mass) / (12.0 * h * h)
    diag = np.full(n_interior, 30.0 * c)
    diag[0] = 29.0 * c
    diag[-1] = 29.0 * c
    off1 = -16.0 * c
    off2 = 1.0 * c
    return diag, off1, off2


def _apply_h_1d(v, diag, off1, off2):
    out = diag * v
    out[:-1] += off1 * v[1:]
    out[1:] += off1 * v[:-1]
    out[:-2] += off2 * v[2:]
    out[2:] += off2 * v[:-2]
    return out


def _matrix_1d(grid: SpatialGrid, u_interior, constants):
    diag, off1, off2 = _kinetic_bands(
        grid.points[0] - 2, grid.spacing[0], constants.hbar, constants.mass_for_axis(0)
    )
    return diag + u_interior, off1, off2


def _sparse_h_2d(grid: SpatialGrid, u_values, constants):
    nx, ny = grid.points
    dx, dy = grid.spacing
    dgx, o1x, o2x = _kinetic_bands(nx - 2, dx, constants.hbar, constants.mass_for_axis(0))
    dgy, o1y, o2y = _kinetic_bands(ny - 2, dy, constants.hbar, constants.mass_for_axis(1))
    tx = sp.diags(
        [np.full(nx - 4, o2x), np.full(nx - 3, o1x), dgx, np.full(nx - 3, o1x), np.full(nx - 4, o2x)],
        [-2, -1, 0, 1, 2],
        format="csr",
    )
    ty = sp.diags(
        [np.full(ny - 4, o2y), np.full(ny - 3, o1y), dgy, np.full(ny - 3, o1y), np.full(ny - 4, o2y)],
        [-2, -1, 0, 1, 2],
        format="csr",
    )
    ix = sp.identity(nx - 2, format="csr")
    iy = sp.identity(ny - 2, format="csr")
    h = sp.kron(tx, iy) + sp.kron(ix, ty)
    h = h + sp.diags(u_values[1:-1, 1:-1].ravel(order="C"))
    return h.tocsr()


def apply_hamiltonian(psi: ComplexField, potential: PotentialSpec,
                      constants: PhysicalConstants = None, t: float = 0.0) -> ComplexField:
    """H psi on the full grid (boundary entries forced to zero)."""
    constants = constants or PhysicalConstants()
    grid = psi.grid
    u = sample_potential(potential, grid, t, constants).values
    out = np.zeros_like(psi.values)
    if grid.dim == 1:
        diag, off1, off2 = _matrix_1d(grid, u[1:-1], constants)
        out[1:-1] = _apply_h_1d(psi.values[1:-1].copy(), diag, off1, off2)
    else:
        h = _sparse_h_2d(grid, u, constants)
        inner = psi.values[1:-1, 1:-1].ravel(order="C")
        out[1:-1, 1:-1] = (h @ inner).reshape(grid.points[0] - 2, grid.points[1] - 2)
    return ComplexField(grid, out)


def stationary_states(grid: SpatialGrid, potential: PotentialSpec, count: int,
                      constants: PhysicalConstants = None) -> SpectrumResult:
    """Lowest `count` eigenpairs of H with Dirichlet boundaries."""
    constants = constants or PhysicalConstants()
    if potential.time_dependent:
        raise ValueError("stationary states need a time-independent potential")
    if count < 1 or count > grid.size // 4:
        raise ValueError(f"count must be in [1, {grid.size // 4}], got {count}")
    u = sample_potential(potential, grid, 0.0, constants).values

    if grid.dim == 1:
        n = grid.points[0] - 2
        diag, off1, off2 = _matrix_1d(grid, u[1:-1], constants)
        ab = np.zeros((3, n))
        ab[0, 2:] = off2
        ab[1, 1:] = off1
        ab[2, :] = diag
        try:
            energies, vecs = sla.eig_banded(
                ab, lower=False, select="i", select_range=(0, count - 1)
            )
        except sla.LinAlgError as exc:  # pragma: no cover
            raise NumericsError(f"banded eigensolver failed: {exc}") from exc
        states = []
        for k in range(count):
            full = np.zeros(grid.points[0], dtype=complex)
            full[1:-1] = vecs[:, k]
            states.append(_fix_state(ComplexField(grid, full)))
        return SpectrumResult(energies=[float(e) for e in energies], states=states)

    h = _sparse_h_2d(grid, u, constants)
    v0 = np.ones(h.shape[0])
    try:
        energies, vecs = spla.eigsh(h, k=count, which="SA", v0=v0)
    except spla.ArpackNoConvergence as exc:
        raise NumericsError(f"sparse eigensolver did not converge: {exc}") from exc
    order = np.argsort(energies)
    states = []
    for k in order:
        full = np.zeros(grid.shape, dtype=complex)
        full[1:-1, 1:-1] = vecs[:, k].reshape(grid.points[0] - 2, grid.points[1] - 2)
        states.append(_fix_state(ComplexField(grid, full)))
    return SpectrumResult(energies=[float(energies[k]) for k in order], states=states)


def _fix_state(state: ComplexField) -> ComplexField:
    """Quadrature-normalize and pin the sign at the largest-|psi| point."""
    vals = state.values / np.sqrt(norm_sq(state))
    anchor = vals.ravel()[np.argmax(np.abs(vals))]
    if anchor.real < 0:
        vals = -vals
    return ComplexField(state.grid, vals)


# -- Crank-Nicolson evolution -------------------------------------------------


def _cayley_step_1d(psi_in, diag_h, off1, off2, alpha):
    """(1 + i a H) psi' = (1 - i a H) psi on interior points (banded solve)."""
    n = psi_in.shape[0]
    rhs = psi_in - 1j * alpha * _apply_h_1d(psi_in, diag_h, off1, off2)
    ab = np.zeros((5, n), dtype=complex)
    ab[0, 2:] = 1j * alpha * off2
    ab[1, 1:] = 1j * alpha * off1
    ab[2, :] = 1.0 + 1j * alpha * diag_h
    ab[3, :-1] = 1j * alpha * off1
    ab[4, :-2] = 1j * alpha * off2
    return sla.solve_banded((2, 2), ab, rhs)


def evolve(psi0: ComplexField, potential: PotentialSpec, dt: float, n_steps: int,
           frame_stride: int = 1, constants: PhysicalConstants = None) -> EvolutionRecord:
    """Propagate psi0 for n_steps of size dt, recording every frame_stride steps."""
    constants = constants or PhysicalConstants()
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if frame_stride < 1:
        raise ValueError("frame_stride must be >= 1")
    nrm = norm_sq(psi0)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"psi0 must be normalized within 1e-8, norm_sq = {nrm}")
    grid = psi0.grid
    hbar = constants.hbar
    driven = potential.time_dependent
    u0 = sample_potential(potential, grid, 0.0, constants).values

    frames = [psi0]
    times = [0.0]
    _boundary_guard(psi0)

    if grid.dim == 1:
        kin_diag, off1, off2 = _kinetic_bands(
            grid.points[0] - 2, grid.spacing[0], hbar, constants.mass_for_axis(0)
        )
        alpha = dt / (2.0 * hbar)
        psi = psi0.values[1:-1].astype(complex)
        diag_h = kin_diag + u0[1:-1]
        for step in range(n_steps):
            if driven:
                t_mid = (step + 0.5) * dt
                u_mid = sample_potential(potential, grid, t_mid, constants).values
                diag_h = kin_diag + u_mid[1:-1]
            psi = _cayley_step_1d(psi, diag_h, off1, off2, alpha)
            if not np.all(np.isfinite(psi)):
                raise NumericsError(f"non-finite wavefunction at step {step + 1}")
            if (step + 1) % frame_stride == 0:
                full = np.zeros(grid.points[0], dtype=complex)
                full[1:-1] = psi
                frame = ComplexField(grid, full)
                frames.append(frame)
                times.append((step + 1) * dt)
                _boundary_guard(frame)
    else:
        dgx, o1x, o2x = _kinetic_bands(
            grid.points[0] - 2, grid.spacing[0], hbar, constants.mass_for_axis(0)
        )
        dgy, o1y, o2y = _kinetic_bands(
            grid.points[1] - 2, grid.spacing[1], hbar, constants.mass_for_axis(1)
        )
        psi = psi0.values[1:-1, 1:-1].astype(complex)
        u_mid = u0
        for step in range(n_steps):
            if driven:
                t_mid = (step + 0.5) * dt
                u_mid = sample_potential(potential, grid, t_mid, constants).values
            ui = u_mid[1:-1, 1:-1]
            # Strang split: x half step, full y step, x half step
            ax_diag = dgx[:, None] + 0.5 * ui
            ay_diag = dgy[None, :] + 0.5 * ui
            psi = _strang_2d(psi, ax_diag, o1x, o2x, ay_diag, o1y, o2y, dt, hbar)
            if not np.all(np.isfinite(psi)):
                raise NumericsError(f"non-finite wavefunction at step {step + 1}")
            if (step + 1) % frame_stride == 0:
                full = np.zeros(grid.shape, dtype=complex)
                full[1:-1, 1:-1] = psi
                frame = ComplexField(grid, full)
                frames.append(frame)
                times.append((step + 1) * dt)
                _boundary_guard(frame)

    return EvolutionRecord(
        times=np.asarray(times),
        frames=frames,
        dt=dt,
        frame_stride=frame_stride,
        potential=potential,
        constants=constants,
    )


def _strang_2d(psi, ax_diag, o1x, o2x, ay_diag, o1y, o2y, dt, hbar):
    """Cayley(x, dt/2) Cayley(y, dt) Cayley(x, dt/2); each factor unitary."""
    psi = _cayley_vardiag(psi, 0, ax_diag, o1x, o2x, dt / (4.0 * hbar))
    psi = _cayley_vardiag(psi, 1, ay_diag, o1y, o2y, dt / (2.0 * hbar))
    psi = _cayley_vardiag(psi, 0, ax_diag, o1x, o2x, dt / (4.0 * hbar))
    return psi


def _cayley_vardiag(values, axis, diag2d, off1, off2, alpha):
    """Cayley step along `axis` where the operator diagonal varies per line."""
    v = np.moveaxis(values, axis, 0)
    d = np.moveaxis(diag2d, axis, 0)
    n, m = v.shape
    out = np.empty_like(v)
    hv = d * v
    hv[:-1] += off1 * v[1:]
    hv[1:] += off1 * v[:-1]
    hv[:-2] += off2 * v[2:]
    hv[2:] += off2 * v[:-2]
    rhs = v - 1j * alpha * hv
    for j in range(m):  # diagonal differs per line, one banded solve each
        ab = np.zeros((5, n), dtype=complex)
        ab[0, 2:] = 1j * alpha * off2
        ab[1, 1:] = 1j * alpha * off1
        ab[2, :] = 1.0 + 1j * alpha * d[:, j]
        ab[3, :-1] = 1j * alpha * off1
        ab[4, :-2] = 1j * alpha * off2
        out[:, j] = sla.solve_banded((2, 2), ab, rhs[:, j])
    return np.moveaxis(out, 0, axis)


def _boundary_guard(frame: ComplexField):
    vals = np.abs(frame.values)
    peak = vals.max()
    if peak == 0:
        return
    if frame.grid.dim == 1:
        edge = max(vals[0], vals[-1])
    else:
        edge = max(vals[0, :].max(), vals[-1, :].max(), vals[:, 0].max(), vals[:, -1].max())
    if edge > BOUNDARY_GUARD * peak:
        warnings.warn(
            f"|psi| at the boundary is {edge / peak:.2e} of its peak; "
            "the domain may be too small",
            stacklevel=3,
        )


def total_energy(psi: ComplexField, potential: PotentialSpec,
                 constants: PhysicalConstants = None, t: float = 0.0) -> float:
    """<psi|H|psi> via quadrature of the gradient form plus int U |psi|^2."""
    constants = constants or PhysicalConstants()
    grid = psi.grid
    kinetic = 0.0
    for a, g in enumerate(gradient(psi)):
        m = constants.mass_for_axis(a)
        kinetic += constants.hbar**2 / (2.0 * m) * norm_sq(g)
    u = sample_potential(potential, grid, t, constants).values
    w = grid.quadrature_weights()
    pot = float(np.sum(u * (psi.values.real**2 + psi.values.imag**2) * w))
    return kinetic + pot
