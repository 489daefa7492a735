"""Hamiltonian flows, tangent (first-variation) dynamics, and stability numbers.

Base trajectories use Stormer-Verlet (kick-drift-kick); the tangent flow is
the exact derivative of that map, so the symplectic two-form of two tangent
solutions is conserved to round-off.  Finite-time characteristic exponents
come from repeated modified-Gram-Schmidt renormalization of a tangent basis;
they are reported with their horizon and per-renormalization history rather
than extrapolated.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import NumericsError


# -- analytic potentials (value, gradient, Hessian) ----------------------------


class HarmonicPotential:
    """U = 1/2 sum_i m_i w_i^2 q_i^2."""

    def __init__(self, omega, masses=None):
        self.omega = np.atleast_1d(np.asarray(omega, dtype=float))
        self.masses = (np.ones_like(self.omega) if masses is None
                       else np.atleast_1d(np.asarray(masses, dtype=float)))

    def value(self, q):
        return 0.5 * np.sum(self.masses * self.omega**2 * np.asarray(q) ** 2)

    def grad(self, q):
        return self.masses * self.omega**2 * np.asarray(q)

    def hess(self, q):
        return np.diag(self.masses * self.omega**2)


class InvertedHarmonicPotential(HarmonicPotential):
    """U = -1/2 sum_i m_i w_i^2 q_i^2 (hyperbolic fixed point at the origin)."""

    def value(self, q):
        return -super().value(q)

    def grad(self, q):
        return -super().grad(q)

    def hess(self, q):
        return -super().hess(q)


class DoubleWellPotential:
    """U = a q^4/4 - b q^2/2, one degree of freedom."""

    def __init__(self, a, b):
        if a <= 0 or b <= 0:
            raise ValueError("double well requires a > 0 and b > 0")
        self.a = float(a)
        self.b = float(b)

    def value(self, q):
        q = np.asarray(q)[0]
        return self.a * q**4 / 4.0 - self.b * q**2 / 2.0

    def grad(self, q):
        q0 = np.asarray(q)[0]
        return np.array([self.a * q0**3 - self.b * q0])

    def hess(self, q):
        q0 = np.asarray(q)[0]
        return np.array([[3.0 * self.a * q0**2 - self.b]])


class PendulumPotential:
    """U = m w^2 (1 - cos q) per degree of freedom."""

    def __init__(self, omega, masses=None):
        self.omega = np.atleast_1d(np.asarray(omega, dtype=float))
        self.masses = (np.ones_like(self.omega) if masses is None
                       else np.atleast_1d(np.asarray(masses, dtype=float)))

    def value(self, q):
        return float(np.sum(self.masses * self.omega**2 * (1.0 - np.cos(np.asarray(q)))))

    def grad(self, q):
        return self.masses * self.omega**2 * np.sin(np.asarray(q))

    def hess(self, q):
        return np.diag(self.masses * self.omega**2 * np.cos(np.asarray(q)))


class TabulatedPotential1D:
    """Cubic-spline potential with spline derivatives, one degree of freedom."""

    def __init__(self, x, u):
        self._spl = CubicSpline(np.asarray(x, float), np.asarray(u, float))
        self._d1 = self._spl.derivative(1)
        self._d2 = self._spl.derivative(2)

    def value(self, q):
        return float(self._spl(np.asarray(q)[0]))

    def grad(self, q):
        return np.array([float(self._d1(np.asarray(q)[0]))])

    def hess(self, q):
        return np.array([[float(self._d2(np.asarray(q)[0]))]])


@dataclass
class HamiltonianSpec:
    """Separable H = sum p_i^2 / 2 m_i + U(q)."""

    masses: np.ndarray
    potential: object

    def __init__(self, potential, masses=1.0, n_dof=None):
        masses = np.atleast_1d(np.asarray(masses, dtype=float))
        if n_dof is not None and len(masses) == 1:
            masses = np.full(n_dof, masses[0])
        if np.any(masses <= 0) or not np.all(np.isfinite(masses)):
            raise ValueError("masses must be finite and > 0")
        if len(masses) > 3:
            raise ValueError("at most 3 degrees of freedom")
        self.masses = masses
        self.potential = potential

    @property
    def n_dof(self) -> int:
        return len(self.masses)

    def energy(self, q, p) -> float:
        return float(np.sum(np.asarray(p) ** 2 / (2.0 * self.masses))
                     + self.potential.value(q))


@dataclass
class ClassicalState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0


@dataclass
class VariationPair:
    """First-variation vectors (xi = dq, eta = dp)."""

    xi: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        self.xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if self.xi.shape != self.eta.shape:
            raise ValueError("xi and eta must have matching shapes")


@dataclass
class ClassicalTrajectory:
    t: np.ndarray       # (n_steps+1,)
    q: np.ndarray       # (n_steps+1, n_dof)
    p: np.ndarray
    energy: np.ndarray
    spec: HamiltonianSpec

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def state(self, k) -> ClassicalState:
        return ClassicalState(q=self.q[k], p=self.p[k], t=float(self.t[k]))

    def to_csv(self, path):
        n = self.q.shape[1]
        head = ["t"] + [f"q{i}" for i in range(n)] + [f"p{i}" for i in range(n)] + ["H"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head)
            for k in range(len(self.t)):
                row = [repr(float(self.t[k]))]
                row += [repr(float(v)) for v in self.q[k]]
                row += [repr(float(v)) for v in self.p[k]]
                row.append(repr(float(self.energy[k])))
                w.writerow(row)


@dataclass
class VariationTrajectory:
    t: np.ndarray
    xi: np.ndarray      # (n_steps+1, n_dof)
    eta: np.ndarray


@dataclass
class CharacteristicSpectrum:
    """Finite-time characteristic exponents, sorted descending."""

    exponents: list
    horizon: float
    renorm_interval: float
    history: np.ndarray       # (n_renorms, n_vectors) running estimates

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump({
                "exponents": [float(v) for v in self.exponents],
                "horizon": self.horizon,
                "renorm_interval": self.renorm_interval,
                "history": [[float(v) for v in row] for row in self.history],
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")


def integrate_hamilton(spec: HamiltonianSpec, state0: ClassicalState,
                       dt: float, n_steps: int) -> ClassicalTrajectory:
    """Stormer-Verlet (kick-drift-kick) flow with the energy recorded per step."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n_dof = spec.n_dof
    q = np.empty((n_steps + 1, n_dof))
    p = np.empty((n_steps + 1, n_dof))
    energy = np.empty(n_steps + 1)
    q[0] = np.atleast_1d(np.asarray(state0.q, dtype=float))
    p[0] = np.atleast_1d(np.asarray(state0.p, dtype=float))
    energy[0] = spec.energy(q[0], p[0])
    inv_m = 1.0 / spec.masses
    grad = spec.potential.grad
    qk, pk = q[0].copy(), p[0].copy()
    for k in range(n_steps):
        ph = pk - 0.5 * dt * grad(qk)
        qk = qk + dt * ph * inv_m
        pk = ph - 0.5 * dt * grad(qk)
        if not (np.all(np.isfinite(qk)) and np.all(np.isfinite(pk))):
            raise NumericsError(f"non-finite state at step {k + 1}")
        q[k + 1] = qk
        p[k + 1] = pk
        energy[k + 1] = spec.energy(qk, pk)
    t = state0.t + dt * np.arange(n_steps + 1)
    return ClassicalTrajectory(t=t, q=q, p=p, energy=energy, spec=spec)


def _tangent_step(xi, eta, hess0, hess1, dt, inv_m):
    """Exact derivative of the kick-drift-kick map."""
    eta_h = eta - 0.5 * dt * hess0 @ xi
    xi_n = xi + dt * inv_m * eta_h
    eta_n = eta_h - 0.5 * dt * hess1 @ xi_n
    return xi_n, eta_n


def variational_flow(spec: HamiltonianSpec, traj: ClassicalTrajectory,
                     pair0: VariationPair) -> VariationTrajectory:
    """Linearized flow along a stored trajectory (tangent of the same integrator)."""
    n_dof = spec.n_dof
    if pair0.xi.shape != (n_dof,):
        raise ValueError(f"variation dimension {pair0.xi.shape} != n_dof {n_dof}")
    n = len(traj.t)
    xi = np.empty((n, n_dof))
    eta = np.empty((n, n_dof))
    xi[0], eta[0] = pair0.xi, pair0.eta
    inv_m = 1.0 / spec.masses
    dt = traj.dt
    hess = spec.potential.hess
    h_prev = hess(traj.q[0])
    for k in range(n - 1):
        h_next = hess(traj.q[k + 1])
        xi[k + 1], eta[k + 1] = _tangent_step(xi[k], eta[k], h_prev, h_next, dt, inv_m)
        h_prev = h_next
    return VariationTrajectory(t=traj.t, xi=xi, eta=eta)


def poincare_invariant(pair_a: VariationTrajectory,
                       pair_b: VariationTrajectory) -> np.ndarray:
    """C(t) = sum_s (xi_s eta'_s - eta_s xi'_s); constant along the flow."""
    if pair_a.t.shape != pair_b.t.shape or not np.allclose(pair_a.t, pair_b.t):
        raise ValueError("variation trajectories are on different time grids")
    return np.sum(pair_a.xi * pair_b.eta - pair_a.eta * pair_b.xi, axis=1)


def characteristic_numbers(spec: HamiltonianSpec, traj: ClassicalTrajectory,
                           n_vectors: int, renorm_interval: float = 1.0) -> CharacteristicSpectrum:
    """Finite-time exponents from tangent growth with periodic orthonormalization."""
    n_dof = spec.n_dof
    if not 1 <= n_vectors <= 2 * n_dof:
        raise ValueError(f"n_vectors must be in [1, {2 * n_dof}]")
    dt = traj.dt
    steps_per_renorm = max(1, int(round(renorm_interval / dt)))
    n_steps = len(traj.t) - 1
    inv_m = 1.0 / spec.masses
    hess = spec.potential.hess

    basis = np.eye(2 * n_dof)[:, :n_vectors]   # columns are (xi; eta)
    log_sums = np.zeros(n_vectors)
    history = []
    h_prev = hess(traj.q[0])
    elapsed = 0.0
    for k in range(n_steps):
        h_next = hess(traj.q[k + 1])
        xi, eta = basis[:n_dof], basis[n_dof:]
        xi, eta = _tangent_step(xi, eta, h_prev, h_next, dt, inv_m[:, None])
        basis = np.vstack([xi, eta])
        h_prev = h_next
        if (k + 1) % steps_per_renorm == 0 or k == n_steps - 1:
            basis, growths = _mgs(basis)
            if np.any(growths <= 0):
                raise NumericsError("degenerate tangent basis during renormalization")
            log_sums += np.log(growths)
            elapsed = traj.t[k + 1] - traj.t[0]
            history.append(log_sums / elapsed)
    horizon = float(traj.t[-1] - traj.t[0])
    exponents = sorted((log_sums / horizon).tolist(), reverse=True)
    return CharacteristicSpectrum(
        exponents=exponents,
        horizon=horizon,
        renorm_interval=steps_per_renorm * dt,
        history=np.asarray(history),
    )


def _mgs(basis):
    """Modified Gram-Schmidt; returns (orthonormal basis, per-column growth)."""
    basis = basis.copy()
    ncols = basis.shape[1]
    growths = np.empty(ncols)
    for j in range(ncols):
        for i in range(j):
            basis[:, j] -= (basis[:, i] @ basis[:, j]) * basis[:, i]
        growths[j] = np.linalg.norm(basis[:, j])
        if growths[j] > 0:
            basis[:, j] /= growths[j]
    return basis, growths


# -- conditional (reduced) first-variation flow --------------------------------


class FreeAction:
    """S0 = p . q for straight-line motion at momentum p."""

    def __init__(self, p):
        self.p = np.atleast_1d(np.asarray(p, dtype=float))

    def grad(self, q):
        return self.p

    def hess(self, q):
        n = len(self.p)
        return np.zeros((n, n))


class LibrationAction:
    """Time-independent 1-dof action with dS0/dq = sqrt(2 m (E - U(q))).

    Valid on the branch p >= 0 away from turning points.
    """

    def __init__(self, potential, energy, mass=1.0):
        self.potential = potential
        self.energy = float(energy)
        self.mass = float(mass)

    def grad(self, q):
        u = self.potential.value(np.atleast_1d(q))
        gap = self.energy - u
        if gap <= 0:
            raise ValueError(f"E - U = {gap} <= 0 at q = {q}; turning point reached")
        return np.array([np.sqrt(2.0 * self.mass * gap)])

    def hess(self, q):
        du = self.potential.grad(np.atleast_1d(q))[0]
        return np.array([[-self.mass * du / self.grad(q)[0]]])


@dataclass
class ReducedFlowResult:
    t: np.ndarray
    xi: np.ndarray             # (n_times, n_dof)
    l_series: np.ndarray       # L(t) = trace of the reduced matrix
    mean_l: float
    lambda_estimate: float     # log(|xi(T)| / |xi(0)|) / T


def conditional_reduced_flow(spec: HamiltonianSpec, action, traj: ClassicalTrajectory,
                             xi0=None, p_tol: float = 1e-6) -> ReducedFlowResult:
    """Integrate d xi_i/dt = sum_s xi_s d/dq_s ( (1/m_i) dS0/dq_i ) along traj.

    The momentum consistency p = dS0/dq is verified along the trajectory; the
    returned mean of L = sum_i d/dq_i((1/m_i) dS0/dq_i) is the finite-time
    exponent of exp(int L dt), whose non-positivity is the reduced stability
    condition (boundary at zero).
    """
    n_dof = spec.n_dof
    n = len(traj.t)
    for k in range(0, n, max(1, n // 64)):
        expected = action.grad(traj.q[k])
        if np.max(np.abs(traj.p[k] - expected)) > p_tol:
            raise ValueError(
                f"trajectory momentum inconsistent with dS0/dq at t = {traj.t[k]}: "
                f"{traj.p[k]} vs {expected}"
            )
    inv_m = 1.0 / spec.masses

    def matrix(q):
        return inv_m[:, None] * action.hess(q)

    xi = np.empty((n, n_dof))
    xi[0] = np.ones(n_dof) if xi0 is None else np.atleast_1d(np.asarray(xi0, float))
    l_series = np.empty(n)
    l_series[0] = np.trace(matrix(traj.q[0]))
    dt = traj.dt
    for k in range(n - 1):
        q0 = traj.q[k]
        q1 = traj.q[k + 1]
        qm = 0.5 * (q0 + q1)
        m0, mm, m1 = matrix(q0), matrix(qm), matrix(q1)
        y = xi[k]
        k1 = m0 @ y
        k2 = mm @ (y + 0.5 * dt * k1)
        k3 = mm @ (y + 0.5 * dt * k2)
        k4 = m1 @ (y + dt * k3)
        xi[k + 1] = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        l_series[k + 1] = np.trace(m1)
    horizon = float(traj.t[-1] - traj.t[0])
    mean_l = float(simpson(l_series, x=traj.t) / horizon)
    norm0 = np.linalg.norm(xi[0])
    norm1 = np.linalg.norm(xi[-1])
    lam = float(np.log(norm1 / norm0) / horizon)
    return ReducedFlowResult(t=traj.t, xi=xi, l_series=l_series,
                             mean_l=mean_l, lambda_estimate=lam)
