"""Guidance trajectories and the equivariance check.

Particles move with the phase-gradient velocity v = grad(S)/m extracted from
a recorded evolution; an ensemble sampled from |psi(0)|^2 should remain
distributed as |psi(t)|^2 (equivariance), which is measured as an L1
histogram distance with its multinomial sampling band.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from .constants import PhysicalConstants
from .errors import NumericsError
from .grids import gradient_arrays
from .madelung import EPS_NODE, PolarField, polar_decompose
from .rng import stream


@dataclass
class TrajectoryEnsemble:
    times: np.ndarray            # (n_times,)
    positions: np.ndarray        # (n_times, n_particles, dim)
    frozen: np.ndarray           # bool (n_times, n_particles)
    near_node: np.ndarray        # bool (n_times, n_particles)
    seed: int
    interpolation: str = "cubic"

    @property
    def n_particles(self) -> int:
        return self.positions.shape[1]

    @property
    def dim(self) -> int:
        return self.positions.shape[2]

    def frozen_fraction(self) -> float:
        return float(self.frozen[-1].mean())

    def to_csv(self, path):
        cols = ["particle_id", "t"] + ["x", "y"][: self.dim] + ["frozen_flag", "near_node_flag"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for p in range(self.n_particles):
                for k, t in enumerate(self.times):
                    row = [p, repr(float(t))]
                    row += [repr(float(c)) for c in self.positions[k, p]]
                    row += [int(self.frozen[k, p]), int(self.near_node[k, p])]
                    w.writerow(row)

    def save_manifest(self, path, config: dict):
        with open(path, "w") as fh:
            json.dump({"seed": self.seed, "interpolation": self.interpolation,
                       "n_particles": self.n_particles, "config": config},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")


def velocity_field(polar: PolarField, constants: PhysicalConstants = None):
    """v_a = (1/m_a) dS/dq_a at unmasked points; masked points carry 0 and the flag."""
    constants = constants or PhysicalConstants()
    excl = polar.residual_mask
    if excl.all():
        raise ValueError("all points are inside the node mask")
    grads = gradient_arrays(polar.S.values, polar.grid)
    comps = []
    for a, g in enumerate(grads):
        v = g / constants.mass_for_axis(a)
        comps.append(np.where(excl, 0.0, v))
    return tuple(comps), excl


def velocity_field_imform(psi, constants: PhysicalConstants = None,
                          floor_rel: float = EPS_NODE):
    """v_a = hbar Im(conj(psi) dpsi/dq_a) / (m_a max(|psi|^2, floor)).

    Independent of the phase unwrap; used as a cross-check of the S route and
    as the near-node fallback (the floor keeps it finite at nodes).
    """
    constants = constants or PhysicalConstants()
    vals = psi.values
    p = vals.real**2 + vals.imag**2
    floor = (floor_rel**2) * p.max()
    p_safe = np.maximum(p, floor)
    grads = gradient_arrays(vals, psi.grid)
    comps = []
    for a, g in enumerate(grads):
        cur = constants.hbar * (np.conj(vals) * g).imag
        comps.append(cur / (constants.mass_for_axis(a) * p_safe))
    return tuple(comps)


def sample_initial_positions(polar: PolarField, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws from the density P by (conditional) inverse-CDF.

    Per-particle counter-based streams keyed by (seed, particle index) make
    the result independent of scheduling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = polar.grid
    p = polar.P.values
    w = grid.quadrature_weights()
    total = float(np.sum(p * w))
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"P must integrate to 1 within 1e-6, got {total}")
    if float(np.sum(np.where(polar.node_mask, 0.0, p) * w)) <= 0:
        raise ValueError("degenerate density: all mass on masked points")

    u = np.array([stream(seed, i).random(grid.dim) for i in range(n)])
    if grid.dim == 1:
        x = grid.axis_coords(0)
        cdf = _cdf_1d(p, x)
        return np.interp(u[:, 0], cdf, x)[:, None]

    x = grid.axis_coords(0)
    y = grid.axis_coords(1)
    wy = np.full(len(y), grid.spacing[1])
    wy[0] *= 0.5
    wy[-1] *= 0.5
    marg_x = p @ wy
    cdf_x = _cdf_1d(marg_x, x)
    xs = np.interp(u[:, 0], cdf_x, x)
    cols = np.clip(np.rint((xs - x[0]) / grid.spacing[0]).astype(int), 0, len(x) - 1)
    ys = np.empty(n)
    for i, c in enumerate(cols):  # conditional slice at the nearest column
        cdf_y = _cdf_1d(p[c], y)
        ys[i] = np.interp(u[i, 1], cdf_y, y)
    return np.column_stack([xs, ys])


def _cdf_1d(density, x):
    h = x[1] - x[0]
    mids = 0.5 * (density[1:] + density[:-1]) * h
    cdf = np.concatenate([[0.0], np.cumsum(mids)])
    if cdf[-1] <= 0:
        raise ValueError("degenerate density")
    return cdf / cdf[-1]


def integrate_ensemble(record, positions0: np.ndarray, substeps: int = 4,
                       constants: PhysicalConstants = None,
                       seed: int = 0) -> TrajectoryEnsemble:
    """RK4 guidance integration of an ensemble through the recorded frames.

    Velocity is cubic in space and linear in time between frames; inside the
    node mask the floored Im-form velocity substitutes for grad(S)/m.
    Particles leaving the domain are frozen at the boundary and flagged.
    """
    constants = constants or PhysicalConstants()
    grid = record.grid
    positions0 = np.atleast_2d(np.asarray(positions0, dtype=float))
    if positions0.ndim == 2 and positions0.shape[1] != grid.dim:
        if grid.dim == 1 and positions0.shape[0] == 1:
            positions0 = positions0.T
        else:
            raise ValueError("positions must be (n, dim)")
    n = positions0.shape[0]
    lows = np.array([b[0] for b in grid.bounds])
    highs = np.array([b[1] for b in grid.bounds])
    if np.any(positions0 < lows) or np.any(positions0 > highs):
        raise ValueError("initial positions outside the grid")

    polars = [polar_decompose(f, constants) for f in record.frames]
    v_interp, masks = [], []
    for polar, frame in zip(polars, record.frames):
        comps, excl = velocity_field(polar, constants)
        im_comps = velocity_field_imform(frame, constants)
        blended = [np.where(excl, vi, vs) for vs, vi in zip(comps, im_comps)]
        if not np.all([np.isfinite(b).all() for b in blended]):
            raise NumericsError("non-finite velocity field in a frame")
        v_interp.append(_make_interp(grid, blended))
        masks.append(polar.residual_mask)

    n_frames = len(record.frames)
    positions = np.empty((n_frames, n, grid.dim))
    frozen = np.zeros((n_frames, n), dtype=bool)
    near = np.zeros((n_frames, n), dtype=bool)
    x = positions0.copy()
    positions[0] = x
    near[0] = _in_mask(grid, masks[0], x)

    for k in range(n_frames - 1):
        fa, fb = v_interp[k], v_interp[k + 1]
        dt_f = record.times[k + 1] - record.times[k]
        h = dt_f / substeps
        active = ~frozen[k]
        xa = x[active]
        for s in range(substeps):
            th0 = s / substeps
            th1 = (s + 0.5) / substeps
            th2 = (s + 1.0) / substeps
            k1 = _vel(fa, fb, xa, th0)
            k2 = _vel(fa, fb, xa + 0.5 * h * k1, th1)
            k3 = _vel(fa, fb, xa + 0.5 * h * k2, th1)
            k4 = _vel(fa, fb, xa + h * k3, th2)
            xa = xa + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        x = x.copy()
        x[active] = xa
        out = np.any((x < lows) | (x > highs), axis=1)
        x = np.clip(x, lows, highs)
        frozen[k + 1] = frozen[k] | out
        positions[k + 1] = x
        near[k + 1] = _in_mask(grid, masks[k + 1], x)

    return TrajectoryEnsemble(
        times=np.asarray(record.times, dtype=float),
        positions=positions,
        frozen=frozen,
        near_node=near,
        seed=seed,
    )


def _make_interp(grid, components):
    if grid.dim == 1:
        x = grid.axis_coords(0)
        splines = [CubicSpline(x, c) for c in components]
        return lambda pts: np.stack([s(pts[:, 0]) for s in splines], axis=1)
    axes = [grid.axis_coords(a) for a in range(grid.dim)]
    interps = [
        RegularGridInterpolator(axes, c, method="cubic", bounds_error=False,
                                fill_value=0.0)
        for c in components
    ]
    return lambda pts: np.stack([f(pts) for f in interps], axis=1)


def _vel(fa, fb, pts, theta):
    return (1.0 - theta) * fa(pts) + theta * fb(pts)


def _in_mask(grid, mask, pts):
    if not mask.any():
        return np.zeros(len(pts), dtype=bool)
    idx = []
    for a in range(grid.dim):
        coords = (pts[:, a] - grid.bounds[a][0]) / grid.spacing[a]
        idx.append(np.clip(np.rint(coords).astype(int), 0, grid.points[a] - 1))
    return mask[tuple(idx)]


@dataclass
class EquivarianceRow:
    t: float
    l1: float
    max_dev: float
    band: float        # multinomial expectation sum sqrt(p(1-p)/n)
    n_bins: int

    def to_dict(self):
        return {"t": self.t, "l1": self.l1, "max_dev": self.max_dev,
                "band": self.band, "n_bins": self.n_bins}


def equivariance_distance(ensemble: TrajectoryEnsemble, record,
                          cells_per_bin: int = 15) -> list:
    """L1 distance between the ensemble histogram and |psi(t)|^2 per frame.

    Histogram cells aggregate `cells_per_bin` grid cells per axis: at the raw
    grid resolution the multinomial sampling floor alone exceeds the bands of
    interest, so distances are measured on coarsened cells, with the
    multinomial band Sum_k sqrt(p_k (1 - p_k)/n) reported alongside.
    Binning happens in index space (a grid point owns the cell centred on it),
    so no point ever straddles a bin edge.
    """
    grid = record.grid
    if len(ensemble.times) != len(record.times) or not np.allclose(
        ensemble.times, record.times
    ):
        raise ValueError("ensemble and record times do not match")
    n_bins = []
    for a in range(grid.dim):
        n_bins.append(max(1, int(np.ceil(grid.points[a] / cells_per_bin))))
    w = grid.quadrature_weights()
    n = ensemble.n_particles
    rows = []
    point_bins = [np.arange(grid.points[a]) // cells_per_bin for a in range(grid.dim)]
    for k, t in enumerate(ensemble.times):
        dens = record.frames[k].abs2 * w
        target = np.zeros(n_bins)
        if grid.dim == 1:
            np.add.at(target, point_bins[0], dens)
        else:
            np.add.at(target, (point_bins[0][:, None], point_bins[1][None, :]), dens)
        target = target / target.sum()

        emp = np.zeros(n_bins)
        idx = []
        for a in range(grid.dim):
            pt = np.rint(
                (ensemble.positions[k][:, a] - grid.bounds[a][0]) / grid.spacing[a]
            ).astype(int)
            idx.append(np.clip(pt, 0, grid.points[a] - 1) // cells_per_bin)
        np.add.at(emp, tuple(idx), 1.0)
        emp = emp / n
        diff = np.abs(emp - target)
        band = float(np.sum(np.sqrt(target * (1.0 - target) / n)))
        rows.append(EquivarianceRow(
            t=float(t), l1=float(diff.sum()), max_dev=float(diff.max()),
            band=band, n_bins=int(target.size),
        ))
    return rows
