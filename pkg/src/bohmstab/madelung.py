"""Polar (amplitude/phase) decomposition and stability residuals.

Writing psi = A exp(iS/hbar) turns the wave equation into coupled transport
and Hamilton-Jacobi equations; this module measures how well a recorded
evolution satisfies them, plus the divergence condition L = sum_i
d/dq_i (g_ij dS/dq_j) (Cartesian metric: Lap(S)/m) whose vanishing expresses
zero net contraction of the guidance flow.

Nodes are handled by mask-and-exclude: points with A below eps_node * max(A)
are flagged, S is filled there by nearest-neighbor extension, and every
derivative-based norm also excludes points whose stencil touches the flagged
set (the node mask dilated by the stencil radius), since phase steps of pi
across a node would otherwise dominate the norms.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .constants import PhysicalConstants
from .grids import (
    ComplexField,
    ScalarField,
    SpatialGrid,
    _deriv2_axis,
    gradient_arrays,
    quadrature_l2,
)
from .potentials import sample_potential

EPS_NODE = 1e-6
STENCIL_RADIUS = 2


@dataclass
class PolarField:
    """Amplitude A >= 0, unwrapped action phase S, density P = A^2."""

    A: ScalarField
    S: ScalarField
    P: ScalarField
    node_mask: np.ndarray        # True where A < eps_node * max(A); S filled there
    anchor_phase: float          # S at the unwrap anchor (global constant, not removed)

    @property
    def grid(self) -> SpatialGrid:
        return self.A.grid

    def excluded(self, radius: int = STENCIL_RADIUS) -> np.ndarray:
        """Node mask dilated by a stencil reach; excluded from derivative norms."""
        if not self.node_mask.any() or radius == 0:
            return self.node_mask
        structure = ndimage.generate_binary_structure(self.grid.dim, 1)
        return ndimage.binary_dilation(
            self.node_mask, structure=structure, iterations=radius
        )

    @property
    def residual_mask(self) -> np.ndarray:
        """Exclusion mask at the single-operator stencil reach."""
        return self.excluded(STENCIL_RADIUS)


def _unwrap_phase(angles: np.ndarray) -> np.ndarray:
    """Deterministic unwrap: 1D left-to-right; 2D rows first, anchored by column 0."""
    if angles.ndim == 1:
        return np.unwrap(angles)
    rows = np.unwrap(angles, axis=1)
    col0 = np.unwrap(angles[:, 0])
    return rows + (col0 - rows[:, 0])[:, None]


def _nearest_fill(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace masked entries by the value of the nearest unmasked point."""
    if not mask.any():
        return values
    idx = ndimage.distance_transform_edt(mask, return_distances=False, return_indices=True)
    return values[tuple(idx)]


def polar_decompose(psi: ComplexField, constants: PhysicalConstants = None,
                    eps_node: float = EPS_NODE) -> PolarField:
    """Split psi into amplitude and unwrapped action phase.

    Angles at masked points are noise-dominated, so they are replaced by the
    nearest unmasked angle before unwrapping; the unwrap then never walks
    through garbage and the branch structure is deterministic.
    """
    constants = constants or PhysicalConstants()
    a = np.abs(psi.values)
    peak = a.max()
    if peak == 0.0:
        raise ValueError("cannot decompose an identically zero field")
    mask = a < eps_node * peak
    angles = _nearest_fill(np.angle(psi.values), mask)
    s = constants.hbar * _unwrap_phase(angles)
    s = _nearest_fill(s, mask)
    grid = psi.grid
    return PolarField(
        A=ScalarField(grid, a),
        S=ScalarField(grid, s),
        P=ScalarField(grid, a * a),
        node_mask=mask,
        anchor_phase=float(s.flat[0]),
    )


def reconstruct(polar: PolarField, constants: PhysicalConstants = None) -> ComplexField:
    constants = constants or PhysicalConstants()
    vals = polar.A.values * np.exp(1j * polar.S.values / constants.hbar)
    return ComplexField(polar.grid, vals)


def _weighted_laplacian(values: np.ndarray, grid: SpatialGrid,
                        constants: PhysicalConstants) -> np.ndarray:
    """sum_a (1/m_a) d^2/dq_a^2, the diagonal-metric divergence of the gradient."""
    out = _deriv2_axis(values, grid.spacing[0], 0) / constants.mass_for_axis(0)
    for a in range(1, grid.dim):
        out = out + _deriv2_axis(values, grid.spacing[a], a) / constants.mass_for_axis(a)
    return out


def quantum_potential(polar: PolarField, constants: PhysicalConstants = None) -> ScalarField:
    """Q = -(hbar^2/2) sum_a (1/m_a) (d^2 A/dq_a^2) / A, masked points filled with 0."""
    constants = constants or PhysicalConstants()
    if polar.node_mask.all():
        raise ValueError("all points are inside the node mask")
    lap = _weighted_laplacian(polar.A.values, polar.grid, constants)
    q = np.zeros_like(lap)
    ok = ~polar.node_mask
    q[ok] = -0.5 * constants.hbar**2 * lap[ok] / polar.A.values[ok]
    return ScalarField(polar.grid, q)


def chetaev_divergence(polar: PolarField, constants: PhysicalConstants = None):
    """L = sum_a (1/m_a) d^2 S/dq_a^2 and its L2 norm over unmasked points."""
    constants = constants or PhysicalConstants()
    lfield = _weighted_laplacian(polar.S.values, polar.grid, constants)
    excl = polar.residual_mask
    lfield = np.where(excl, 0.0, lfield)
    norm = quadrature_l2(lfield, polar.grid, where=~excl)
    return ScalarField(polar.grid, lfield), float(norm)


def stability_residual_16(polar: PolarField, constants: PhysicalConstants = None) -> float:
    """Norm of sum_ij d/dq_i [ g_ij ((1/psi) dpsi/dq_j - (1/A) dA/dq_j) ].

    For psi = A exp(iS/hbar) the bracket reduces identically to
    (i/hbar) dS/dq_j, so the expression equals (i/hbar) * L and the returned
    norm is (1/hbar) times the divergence norm.  The reduction is applied
    exactly; the proportionality is what the identity tests check.
    """
    constants = constants or PhysicalConstants()
    bracket_scale = 1.0 / constants.hbar  # |(i/hbar) dS| per unit |dS|
    lap = _weighted_laplacian(polar.S.values, polar.grid, constants)
    excl = polar.residual_mask
    return float(bracket_scale * quadrature_l2(lap, polar.grid, where=~excl))


# -- residual reports over evolution records ----------------------------------


@dataclass
class ResidualRow:
    frame_time: float
    residual_name: str
    l2: float
    max: float
    masked_fraction: float
    scale: float

    def to_dict(self) -> dict:
        return {
            "frame_time": self.frame_time,
            "residual_name": self.residual_name,
            "l2": self.l2,
            "max": self.max,
            "masked_fraction": self.masked_fraction,
            "scale": self.scale,
        }


@dataclass
class ResidualReport:
    rows: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)   # (name, frame) -> ScalarField, optional

    def add(self, frame_time, name, values, grid, excl, scale=None, keep_field=False):
        ok = ~excl
        values = np.where(excl, 0.0, values)
        l2 = quadrature_l2(values, grid, where=ok)
        mx = float(np.max(np.abs(values[ok]))) if ok.any() else 0.0
        row = ResidualRow(
            frame_time=float(frame_time),
            residual_name=name,
            l2=float(l2),
            max=mx,
            masked_fraction=float(excl.mean()),
            scale=float(scale if scale is not None else l2),
        )
        self.rows.append(row)
        if keep_field:
            self.fields[(name, float(frame_time))] = ScalarField(grid, values)
        return row

    def names(self):
        return sorted({r.residual_name for r in self.rows})

    def aggregate_l2(self, name: str) -> float:
        vals = [r.l2 for r in self.rows if r.residual_name == name]
        if not vals:
            raise KeyError(f"no rows named {name!r}")
        return float(np.sqrt(np.mean(np.square(vals))))

    def aggregate_scale(self, name: str) -> float:
        vals = [r.scale for r in self.rows if r.residual_name == name]
        return float(max(vals))

    def to_json_rows(self) -> list:
        return [r.to_dict() for r in self.rows]


COMPOSED_RADIUS = 2 * STENCIL_RADIUS  # reach of div(grad(.)) compositions


def _record_polars(record, constants):
    if len(record.frames) < 3:
        raise ValueError("need at least 3 frames for central time differences")
    dts = np.diff(record.times)
    if not np.allclose(dts, dts[0], rtol=1e-12, atol=1e-15):
        raise ValueError("frame spacing is not uniform")
    polars = [polar_decompose(f, constants) for f in record.frames]
    return polars, float(dts[0])


def _sdot_central(frame_prev, frame_next, frame_dt, hbar):
    """Central time derivative of S, branch-free.

    hbar * arg(psi_{k+1} conj(psi_{k-1})) / (2 dt): the spatially unwrapped S
    of adjacent frames can sit on different 2*pi branches, while the phase
    increment between frames is small and local (valid while |E| dt < pi*hbar).
    """
    prod = frame_next.values * np.conj(frame_prev.values)
    return hbar * np.angle(prod) / (2.0 * frame_dt)


def _grad_weighted(values, grid, constants):
    grads = gradient_arrays(values, grid)
    inv_m = [1.0 / constants.mass_for_axis(a) for a in range(grid.dim)]
    return grads, inv_m


def bohm_residuals(record, constants: PhysicalConstants = None,
                   keep_fields: bool = False) -> ResidualReport:
    """Continuity / quantum Hamilton-Jacobi residuals per interior frame.

    Rows per frame:
      r1_continuity    dP/dt + div(P grad(S)/m)        (standard transport)
      r2_gradient_only dP/dt + grad(P).grad(S)/m       (variant without the
                       P*Lap(S) term; vanishes only where L = 0 -- reported
                       as a measurement, not an error)
      r3_quantum_hj    dS/dt + |grad S|^2/2m + U + Q
      r4_divergence    L = Lap(S)/m
    """
    constants = constants or PhysicalConstants()
    report = ResidualReport()
    polars, frame_dt = _record_polars(record, constants)
    grid = record.grid
    from .grids import divergence_arrays  # local to avoid cycle at import time

    for k in range(1, len(polars) - 1):
        prev, cur, nxt = polars[k - 1], polars[k], polars[k + 1]
        t_k = record.times[k]
        excl = (prev.excluded(COMPOSED_RADIUS) | cur.excluded(COMPOSED_RADIUS)
                | nxt.excluded(COMPOSED_RADIUS))
        pdot = (nxt.P.values - prev.P.values) / (2.0 * frame_dt)
        sdot = _sdot_central(record.frames[k - 1], record.frames[k + 1],
                             frame_dt, constants.hbar)
        grads, inv_m = _grad_weighted(cur.S.values, grid, constants)
        gradp = gradient_arrays(cur.P.values, grid)

        flux = [cur.P.values * g * im for g, im in zip(grads, inv_m)]
        div_flux = divergence_arrays(flux, grid)
        r1 = pdot + div_flux
        report.add(t_k, "r1_continuity", r1, grid, excl,
                   scale=max(quadrature_l2(pdot, grid, where=~excl),
                             quadrature_l2(div_flux, grid, where=~excl)),
                   keep_field=keep_fields)

        adv = sum(gp * g * im for gp, g, im in zip(gradp, grads, inv_m))
        r2 = pdot + adv
        report.add(t_k, "r2_gradient_only", r2, grid, excl,
                   scale=max(quadrature_l2(pdot, grid, where=~excl),
                             quadrature_l2(adv, grid, where=~excl)),
                   keep_field=keep_fields)

        kin = sum(0.5 * g * g * im for g, im in zip(grads, inv_m))
        u = sample_potential(record.potential, grid, t_k, constants).values
        q = quantum_potential(cur, constants).values
        r3 = sdot + kin + u + q
        r3_scale = max(
            quadrature_l2(sdot, grid, where=~excl),
            quadrature_l2(kin, grid, where=~excl),
            quadrature_l2(u, grid, where=~excl),
            quadrature_l2(q, grid, where=~excl),
        )
        report.add(t_k, "r3_quantum_hj", r3, grid, excl, scale=r3_scale,
                   keep_field=keep_fields)

        lfield, _ = chetaev_divergence(cur, constants)
        report.add(t_k, "r4_divergence", lfield.values, grid, excl,
                   keep_field=keep_fields)
    return report


def amplitude_transport_residuals(record, constants: PhysicalConstants = None) -> ResidualReport:
    """Amplitude-transport residuals under both published sign conventions.

    The imaginary part of the wave equation gives
    dA/dt = -(grad A . grad S)/m - A Lap(S)/2m.  Rows:
      amp_minus_gradient  dA/dt + grad(A).grad(S)/m      (sign from the wave
                          equation, Lap(S) term dropped)
      amp_plus_gradient   dA/dt - grad(A).grad(S)/m      (opposite convention)
      amp_full            dA/dt + [grad(A).grad(S) + A Lap(S)/2]/m
    """
    constants = constants or PhysicalConstants()
    report = ResidualReport()
    polars, frame_dt = _record_polars(record, constants)
    grid = record.grid
    for k in range(1, len(polars) - 1):
        prev, cur, nxt = polars[k - 1], polars[k], polars[k + 1]
        t_k = record.times[k]
        excl = (prev.excluded(COMPOSED_RADIUS) | cur.excluded(COMPOSED_RADIUS)
                | nxt.excluded(COMPOSED_RADIUS))
        adot = (nxt.A.values - prev.A.values) / (2.0 * frame_dt)
        grads, inv_m = _grad_weighted(cur.S.values, grid, constants)
        grada = gradient_arrays(cur.A.values, grid)
        adv = sum(ga * gs * im for ga, gs, im in zip(grada, grads, inv_m))
        lap_s = _weighted_laplacian(cur.S.values, grid, constants)
        scale = max(quadrature_l2(adot, grid, where=~excl),
                    quadrature_l2(adv, grid, where=~excl))
        report.add(t_k, "amp_minus_gradient", adot + adv, grid, excl, scale=scale)
        report.add(t_k, "amp_plus_gradient", adot - adv, grid, excl, scale=scale)
        report.add(t_k, "amp_full", adot + adv + 0.5 * cur.A.values * lap_s,
                   grid, excl, scale=scale)
    return report


def energy_balance_identity(record, constants: PhysicalConstants = None) -> ResidualReport:
    """Q as the energy-balance defect, plus the kinetic-term decomposition.

    Rows per frame:
      q_energy_balance  Q - (-dS/dt - U - |grad S|^2/2m); same content as the
                        quantum-HJ residual, organized around Q.
      kinetic_split     l2 = relative L2 difference between |grad S|^2/2m
                        evaluated directly and reconstructed from the
                        log-derivative split (1/psi)grad(psi) =
                        (1/A)grad(A) + (i/hbar)grad(S); max = max abs
                        pointwise difference.  The reconstruction follows the
                        exact split, so only the algebra (signs, the factor
                        on the cross term) and floating-point cancellation
                        are being tested.
      kinetic_cross     same for the imaginary part against
                        -hbar grad(A).grad(S)/(A m).
    """
    constants = constants or PhysicalConstants()
    hbar = constants.hbar
    report = ResidualReport()
    polars, frame_dt = _record_polars(record, constants)
    grid = record.grid
    for k in range(1, len(polars) - 1):
        prev, cur, nxt = polars[k - 1], polars[k], polars[k + 1]
        t_k = record.times[k]
        excl = (prev.excluded(COMPOSED_RADIUS) | cur.excluded(COMPOSED_RADIUS)
                | nxt.excluded(COMPOSED_RADIUS))
        ok = ~excl
        sdot = _sdot_central(record.frames[k - 1], record.frames[k + 1],
                             frame_dt, constants.hbar)
        grads, inv_m = _grad_weighted(cur.S.values, grid, constants)
        grada = gradient_arrays(cur.A.values, grid)
        kin = sum(0.5 * g * g * im for g, im in zip(grads, inv_m))
        u = sample_potential(record.potential, grid, t_k, constants).values
        q = quantum_potential(cur, constants).values
        resid = q - (-sdot - u - kin)
        scale = max(quadrature_l2(q, grid, where=ok),
                    quadrature_l2(kin + u, grid, where=ok),
                    quadrature_l2(sdot, grid, where=ok))
        report.add(t_k, "q_energy_balance", resid, grid, excl, scale=scale)

        a_safe = np.where(cur.node_mask, 1.0, cur.A.values)
        recon = np.zeros_like(kin, dtype=complex)
        for ga, gs, im in zip(grada, grads, inv_m):
            log_d = ga / a_safe + 1j * gs / hbar       # (1/psi) dpsi via the split
            recon += 0.5 * im * (-(hbar**2) * log_d**2 + hbar**2 * (ga / a_safe) ** 2)
        diff_re = np.where(excl, 0.0, recon.real - kin)
        kin_norm = quadrature_l2(kin, grid, where=ok)
        l2_rel = quadrature_l2(diff_re, grid, where=ok) / max(kin_norm, 1e-300)
        row = ResidualRow(
            frame_time=float(t_k),
            residual_name="kinetic_split",
            l2=float(l2_rel),
            max=float(np.max(np.abs(diff_re[ok])) if ok.any() else 0.0),
            masked_fraction=float(excl.mean()),
            scale=float(kin_norm),
        )
        report.rows.append(row)

        cross_expected = -sum(hbar * ga * gs * im for ga, gs, im in zip(grada, grads, inv_m)) / a_safe
        diff_im = np.where(excl, 0.0, recon.imag - cross_expected)
        cross_norm = quadrature_l2(cross_expected, grid, where=ok)
        report.rows.append(ResidualRow(
            frame_time=float(t_k),
            residual_name="kinetic_cross",
            l2=float(quadrature_l2(diff_im, grid, where=ok) / max(cross_norm, 1e-300)),
            max=float(np.max(np.abs(diff_im[ok])) if ok.any() else 0.0),
            masked_fraction=float(excl.mean()),
            scale=float(cross_norm),
        ))
    return report
