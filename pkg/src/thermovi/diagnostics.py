"""Conserved quantities, L2 error norms and the travelling-wave reference solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Discretization
from .boundary import BoundaryConditions
from .errors import InvalidArgument, UndefinedCoupling, UndefinedRelativeError
from .integrator import State
from .material import LinearThermoElastic, amplitude_ratio, phase_speeds
from .mesh import Mesh

# Degree-2 simplex rules in barycentric coordinates; weights are fractions of Vol(K).
_GAUSS = {
    1: (
        np.array([[0.5 + 0.5 / np.sqrt(3), 0.5 - 0.5 / np.sqrt(3)], [0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)]]),
        np.array([0.5, 0.5]),
    ),
    2: (
        np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
        np.full(3, 1 / 3),
    ),
    3: (
        np.array(
            [[0.5854101966249685 if i == j else 0.1381966011250105 for j in range(4)] for i in range(4)]
        ),
        np.full(4, 0.25),
    ),
}


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    L: np.ndarray
    A: np.ndarray | float | None
    entropy: float
    errors: tuple[float, float, float, float] | None = None


def total_energy(disc: Discretization, state: State, bc: BoundaryConditions | None = None, theta=None) -> float:
    """Kinetic + internal energy under the nodal rule, plus E_h when loads are active."""
    if theta is None:
        theta = state.theta if state.theta is not None else disc.nodal_temperature(state.phi, state.tau)
    kinetic = 0.5 * float(np.sum(np.sum(state.p**2, axis=1) / disc.mass))
    H = kinetic + disc.internal_energy_total(state.phi, state.Phi, np.asarray(theta))
    if bc is not None and bc.has_loads:
        H += disc.external_energy(state.phi, state.Phi, bc)
    return H


def momenta(state: State):
    """Linear momentum and angular momentum (vector in 3D, scalar in 2D, None in 1D)."""
    L = state.p.sum(axis=0)
    d = state.phi.shape[1]
    if d == 3:
        A = np.cross(state.phi, state.p).sum(axis=0)
    elif d == 2:
        A = float(np.sum(state.phi[:, 0] * state.p[:, 1] - state.phi[:, 1] * state.p[:, 0]))
    else:
        A = None
    return L, A


def total_entropy(state: State) -> float:
    return float(np.sum(state.tau))


def record(disc, state, bc=None, errors=None) -> DiagnosticsRecord:
    L, A = momenta(state)
    return DiagnosticsRecord(state.t, total_energy(disc, state, bc), L, A, total_entropy(state), errors)


def quadrature_points(mesh: Mesh):
    """Physical points (E, q, d), weights (E, q) and barycentrics (q, d+1)."""
    lam, w = _GAUSS[mesh.dim]
    x = mesh.coords[mesh.elements]
    pts = np.einsum("qb,ebi->eqi", lam, x)
    return pts, mesh.volumes[:, None] * w[None, :], lam


def l2_error(mesh: Mesh, z_nodal, exact, t: float | None = None) -> float:
    """Relative L2 error of a P1 nodal field against ``exact(X)`` (or ``exact(X, t)``).

    ``z_nodal`` is (N,) or (N, k); ``exact`` receives an (n, d) array of points.
    """
    z = np.asarray(z_nodal, dtype=float)
    pts, w, lam = quadrature_points(mesh)
    E, q, d = pts.shape
    flat = pts.reshape(-1, d)
    ex = np.asarray(exact(flat) if t is None else exact(flat, t), dtype=float)
    zh = np.einsum("qb,eb...->eq...", lam, z[mesh.elements])
    ex = ex.reshape(zh.shape)
    diff2 = (zh - ex) ** 2
    ref2 = ex**2
    if diff2.ndim == 3:
        diff2, ref2 = diff2.sum(axis=2), ref2.sum(axis=2)
    den = np.sqrt(np.sum(w * ref2))
    if den == 0:
        raise UndefinedRelativeError("exact field has zero L2 norm")
    return float(np.sqrt(np.sum(w * diff2)) / den)


@dataclass(frozen=True)
class HarmonicReference:
    """Coupled travelling wave ``u = A_phi cos(K X + omega t)``, ``Phi = A_Phi cos(K X + omega t)``.

    Only the first coordinate enters; for d > 1 the displacement is along X.
    """

    model: LinearThermoElastic
    omega: float
    K: float
    A_phi: float
    A_Phi: float

    def _arg(self, X, t):
        return self.K * np.asarray(X)[..., 0] + self.omega * t

    def u(self, X, t):
        return self.A_phi * np.cos(self._arg(X, t))

    def u_dot(self, X, t):
        return -self.A_phi * self.omega * np.sin(self._arg(X, t))

    def Phi(self, X, t):
        return self.A_Phi * np.cos(self._arg(X, t))

    def Phi_dot(self, X, t):
        return -self.A_Phi * self.omega * np.sin(self._arg(X, t))

    def motion(self, X, t):
        X = np.asarray(X, dtype=float)
        out = X.copy()
        out[..., 0] += self.u(X, t)
        return out

    def velocity(self, X, t):
        X = np.asarray(X, dtype=float)
        out = np.zeros_like(X)
        out[..., 0] = self.u_dot(X, t)
        return out

    def dispersion_residual(self) -> float:
        s = self.omega / self.K
        m = self.model
        E = m.effective_stiffness
        # (s^2 - E/rho0)(s^2 - kappa theta0/(c rho0)) = gamma^2 theta0 s^2 / c
        lhs = (s**2 - E / m.rho0) * (s**2 - m.kappa * m.theta0 / (m.c * m.rho0))
        rhs = m.gamma**2 * m.theta0 * s**2 / m.c
        return abs(lhs - rhs) / max(abs(rhs), abs(lhs), 1e-300)


def harmonic_reference(model: LinearThermoElastic, omega=None, K=None, amplitude: float = 1.0) -> HarmonicReference:
    """Fast coupled branch: give exactly one of ``omega`` or ``K``."""
    if (omega is None) == (K is None):
        raise InvalidArgument("give exactly one of omega or K")
    if model.gamma == 0:
        raise UndefinedCoupling("the coupled wave branch needs gamma != 0")
    speed = phase_speeds(model)[0]
    if omega is None:
        omega = speed * K
    else:
        K = omega / speed
    return HarmonicReference(model, float(omega), float(K), float(amplitude), amplitude * amplitude_ratio(model, speed))
