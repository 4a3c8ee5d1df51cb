"""Explicit variational time steppers in position-momentum form.

``euler_a`` (F0) and ``euler_b`` (F1) are the two first-order, mutually
adjoint symplectic Euler variants obtained from the discrete Lagrangians that
evaluate the potential at the start and at the end of the step.  Their
half-step compositions ``f10 = F1(dt/2) o F0(dt/2)`` and
``f01 = F0(dt/2) o F1(dt/2)`` are second order.

Dirichlet data follow the extended-phase-space convention: the A step
samples the prescribed rates at the start of its step, the B step at its
end.  Prescribed values are always taken at the end of the (half) step.

Every stepper returns a new :class:`State`; the input is never modified,
so a failing step leaves the caller's state intact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .assembly import Discretization
from .boundary import BoundaryConditions
from .errors import InvalidArgument, UnsupportedEstimate
from .material import LinearThermoElastic, max_wave_speed
from .mesh import Mesh


@dataclass(frozen=True)
class State:
    """Nodal positions and momenta at time ``t``.

    ``theta`` caches the nodal temperatures recovered from ``tau``; it is
    ``None`` for the internal half-step states of a composition.
    """

    t: float
    phi: np.ndarray  # (N, d)
    Phi: np.ndarray  # (N,)
    p: np.ndarray  # (N, d)
    tau: np.ndarray  # (N,)
    theta: np.ndarray | None = None

    def __post_init__(self):
        for name in ("phi", "Phi", "p", "tau", "theta"):
            a = getattr(self, name)
            if a is not None:
                a = np.array(a, dtype=float)
                a.setflags(write=False)
                object.__setattr__(self, name, a)

    def velocities(self, mass):
        return self.p / mass[:, None]

    def as_vector(self) -> np.ndarray:
        """Canonical ordering (phi, Phi, p, tau), flattened."""
        return np.concatenate([self.phi.ravel(), self.Phi, self.p.ravel(), self.tau])

    @classmethod
    def from_vector(cls, t, z, n_nodes, dim):
        nd = n_nodes * dim
        phi = z[:nd].reshape(n_nodes, dim)
        Phi = z[nd : nd + n_nodes]
        p = z[nd + n_nodes : 2 * nd + n_nodes].reshape(n_nodes, dim)
        tau = z[2 * nd + n_nodes :]
        return cls(t, phi, Phi, p, tau)


class VariationalIntegrator:
    """Steppers bound to one discretisation and one set of boundary conditions."""

    schemes = ("f10", "f01", "euler-a", "euler-b")

    def __init__(self, disc: Discretization, bc: BoundaryConditions | None = None):
        self.disc = disc
        self.bc = bc if bc is not None else BoundaryConditions()
        self.X = disc.mesh.coords
        self.Q = disc.entropy_source(self.bc)
        self._constant_B = self.bc.body_potential_gradient is None
        self._B0 = disc.external_force(None, self.bc) if self._constant_B else None

    # -- setup ------------------------------------------------------------------

    def initialize(self, phi0, v0, Phi0, theta0, t: float = 0.0) -> State:
        """Momenta from initial velocities and temperatures (Legendre transform)."""
        d = self.disc
        phi0 = np.asarray(phi0, dtype=float).reshape(d.n_nodes, d.dim)
        v0 = np.broadcast_to(np.asarray(v0, dtype=float), phi0.shape)
        theta0 = np.broadcast_to(np.asarray(theta0, dtype=float), (d.n_nodes,))
        Phi0 = np.broadcast_to(np.asarray(Phi0, dtype=float), (d.n_nodes,))
        p = d.mass[:, None] * v0
        tau = d.thermal_momentum(phi0, theta0)
        return State(t, phi0, Phi0, p, tau, theta0)

    def velocities(self, state: State) -> np.ndarray:
        return state.p / self.disc.mass[:, None]

    def temperatures(self, state: State) -> np.ndarray:
        if state.theta is not None:
            return state.theta
        return self.disc.nodal_temperature(state.phi, state.tau)

    # -- Dirichlet bookkeeping ------------------------------------------------

    def _active(self, sets, t, dt):
        return [s for s in sets if s.active(t, dt)]

    def _free(self, sets):
        free = np.ones(self.disc.n_nodes, dtype=bool)
        for s in sets:
            free[s.nodes] = False
        return free

    def _B(self, phi):
        if self._constant_B:
            return self._B0
        return self.disc.external_force(phi, self.bc)

    # -- first-order steps ------------------------------------------------------

    def euler_a(self, state: State, dt: float, refresh: bool = True) -> State:
        """F0: thermal solve and mechanical update with forces at the step start."""
        disc = self.disc
        t0, t1 = state.t, state.t + dt
        mech = self._active(self.bc.mechanical, t0, dt)
        therm = self._active(self.bc.thermal, t0, dt)
        free_t = self._free(therm)
        m = disc.mass

        F0 = disc.deformation_gradients(state.phi)

        # pass 1: thermal positions and the rate field theta_pre
        tau1 = state.tau + dt * (disc.entropy_flux_divergence(state.Phi) + self.Q)
        theta_pre = np.zeros(disc.n_nodes)
        fn = np.flatnonzero(free_t)
        theta_pre[fn] = disc.nodal_temperature(state.phi, tau1[fn], fn, F=F0)
        Phi1 = state.Phi + dt * theta_pre
        for s in therm:
            theta_pre[s.nodes] = s.rate(self.X[s.nodes], t0)
            Phi1[s.nodes] = s.value(self.X[s.nodes], t1)

        # pass 2: mechanical update
        force = disc.internal_force(state.phi, state.Phi, theta_pre, F=F0) - self._B(state.phi)
        p1 = state.p - dt * force
        phi1 = state.phi + dt * p1 / m[:, None]
        for s in mech:
            Xs = self.X[s.nodes]
            phi1[s.nodes] = s.value(Xs, t1)
            p1[s.nodes] = m[s.nodes, None] * s.rate(Xs, t1)

        # pass 3: thermal momenta at prescribed nodes
        for s in therm:
            tau1[s.nodes] = disc.thermal_momentum(phi1, s.rate(self.X[s.nodes], t1), s.nodes)
        out = State(t1, phi1, Phi1, p1, tau1)
        return self._refresh(out, therm) if refresh else out

    def euler_b(self, state: State, dt: float, refresh: bool = True) -> State:
        """F1: drift first, then thermal solve and kicks at the step end."""
        disc = self.disc
        t0, t1 = state.t, state.t + dt
        mech = self._active(self.bc.mechanical, t0, dt)
        therm = self._active(self.bc.thermal, t0, dt)
        free_t = self._free(therm)
        m = disc.mass

        # pass 1: positions
        phi1 = state.phi + dt * state.p / m[:, None]
        for s in mech:
            phi1[s.nodes] = s.value(self.X[s.nodes], t1)
        F1 = disc.deformation_gradients(phi1)

        # pass 2: thermal positions from the old thermal momenta
        theta_pre = np.zeros(disc.n_nodes)
        fn = np.flatnonzero(free_t)
        theta_pre[fn] = disc.nodal_temperature(phi1, state.tau[fn], fn, F=F1)
        Phi1 = state.Phi + dt * theta_pre
        for s in therm:
            theta_pre[s.nodes] = s.rate(self.X[s.nodes], t1)
            Phi1[s.nodes] = s.value(self.X[s.nodes], t1)

        # pass 3: momenta
        force = disc.internal_force(phi1, Phi1, theta_pre, F=F1) - self._B(phi1)
        p1 = state.p - dt * force
        for s in mech:
            p1[s.nodes] = m[s.nodes, None] * s.rate(self.X[s.nodes], t1)
        # Upsilon(phi1, theta_pre) equals the old tau at free nodes by construction
        tau1 = state.tau + dt * (disc.entropy_flux_divergence(Phi1) + self.Q)
        for s in therm:
            tau1[s.nodes] = disc.thermal_momentum(phi1, theta_pre[s.nodes], s.nodes, F=F1)
        out = State(t1, phi1, Phi1, p1, tau1)
        return self._refresh(out, therm) if refresh else out

    def _refresh(self, state: State, therm) -> State:
        free = self._free(therm)
        theta = np.empty(self.disc.n_nodes)
        fn = np.flatnonzero(free)
        theta[fn] = self.disc.nodal_temperature(state.phi, state.tau[fn], fn)
        for s in therm:
            theta[s.nodes] = s.rate(self.X[s.nodes], state.t)
        return replace(state, theta=theta)

    # -- second-order compositions --------------------------------------------

    def f10(self, state: State, dt: float) -> State:
        half = self.euler_a(state, 0.5 * dt, refresh=False)
        return self.euler_b(half, 0.5 * dt)

    def f01(self, state: State, dt: float) -> State:
        half = self.euler_b(state, 0.5 * dt, refresh=False)
        return self.euler_a(half, 0.5 * dt)

    def step(self, state: State, dt: float, scheme: str = "f10") -> State:
        try:
            fn = {
                "f10": self.f10,
                "f01": self.f01,
                "euler-a": self.euler_a,
                "euler-b": self.euler_b,
            }[scheme]
        except KeyError:
            raise InvalidArgument(f"unknown integrator {scheme!r}; choose from {self.schemes}") from None
        return fn(state, dt)


def stable_dt(mesh: Mesh, model, safety: float = 1.0) -> float:
    """Courant estimate ``safety * h_min / c_max`` for the linear model."""
    if not 0 < safety <= 1:
        raise InvalidArgument(f"safety fraction must lie in (0, 1], got {safety}")
    if not isinstance(model, LinearThermoElastic):
        raise UnsupportedEstimate("no wave-speed estimate for this model; supply dt explicitly")
    return safety * float(mesh.inscribed_diameters.min()) / max_wave_speed(model)
