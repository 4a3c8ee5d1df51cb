"""Nodal operators of the lumped (Gauss-Lobatto) P1 discretisation.

With quadrature points at the element nodes, node ``a`` of element ``K``
carries weight ``w_aK = Vol(K)/(d+1)``, the mass matrix is diagonal, and
every derivative of the discrete free energy

    W_h = rho0 * sum_K sum_{b in K} w_bK A(F_K, beta_K, theta_b)

becomes a ring sum over the elements touching a node:

* ``S_a = dW_h/dphi_a = sum_K [sum_b w_bK P(F_K, beta_K, theta_b)] gradN_a|K``
* ``H_a = -dW_h/dPhi_a = sum_K Vol(K) h(beta_K) . gradN_a|K``
* ``Upsilon_a = -dW_h/dtheta_a = rho0 sum_K w_aK eta(F_K, theta_a)``

Nodal sums use ``np.bincount`` over the element table, so reductions happen
in a fixed order and results are reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

from .boundary import BoundaryConditions
from .errors import InvertedElement
from .material import SeparableModel, ThermoElasticModel, solve_increasing
from .mesh import Mesh, lumped_weights


class Discretization:
    """A mesh paired with a material; owns all precomputed geometry."""

    def __init__(self, mesh: Mesh, model: ThermoElasticModel):
        self.mesh = mesh
        self.model = model
        self.dim = mesh.dim
        self.n_nodes = mesh.n_nodes
        self.elements = mesh.elements
        self.volumes = mesh.volumes
        self.grads = mesh.shape_gradients
        lw = lumped_weights(mesh)
        self.pair_weights = lw.pair
        self.node_weights = lw.node
        self.mass = model.rho0 * lw.node
        self._flat = self.elements.ravel()

    # -- helpers --------------------------------------------------------------

    def scatter(self, values: np.ndarray) -> np.ndarray:
        """Sum per-(element, local node) values into nodes: (E, d+1, ...) -> (N, ...)."""
        n = self.n_nodes
        if values.ndim == 2:
            return np.bincount(self._flat, weights=values.ravel(), minlength=n)
        flat = values.reshape(len(self._flat), -1)
        out = np.empty((n, flat.shape[1]))
        for j in range(flat.shape[1]):
            out[:, j] = np.bincount(self._flat, weights=flat[:, j], minlength=n)
        return out.reshape((n,) + values.shape[2:])

    def deformation_gradients(self, phi: np.ndarray) -> np.ndarray:
        F = np.einsum("ebi,ebj->eij", phi[self.elements], self.grads)
        if self.model.requires_positive_jacobian:
            J = np.linalg.det(F)
            bad = np.flatnonzero(J <= 0)
            if len(bad):
                raise InvertedElement(bad[0], J[bad[0]])
        return F

    def thermal_gradients(self, Phi: np.ndarray) -> np.ndarray:
        return np.einsum("eb,ebj->ej", Phi[self.elements], self.grads)

    # -- operators --------------------------------------------------------------

    def lumped_mass(self) -> np.ndarray:
        return self.mass.copy()

    def internal_force(self, phi, Phi, theta, F=None) -> np.ndarray:
        """S_a with each element's stress averaged over its nodal temperatures."""
        F = self.deformation_gradients(phi) if F is None else F
        beta = self.thermal_gradients(Phi)
        P = self.model.stress(F[:, None], beta[:, None], theta[self.elements])
        Pbar = np.einsum("eb,ebij->eij", self.pair_weights, P)
        return self.scatter(np.einsum("eij,eaj->eai", Pbar, self.grads))

    def entropy_flux_divergence(self, Phi) -> np.ndarray:
        h = self.model.entropy_flux(self.thermal_gradients(Phi))
        return self.scatter(self.volumes[:, None] * np.einsum("ej,eaj->ea", h, self.grads))

    def _mechanical_entropy_sum(self, F):
        m = self.model.mechanical_entropy(F)
        return self.scatter(self.pair_weights * m[:, None])

    def thermal_momentum(self, phi, theta, nodes=None, F=None) -> np.ndarray:
        """Upsilon_a(phi_h, theta_a); with ``nodes``, ``theta`` is aligned to that subset."""
        F = self.deformation_gradients(phi) if F is None else F
        model = self.model
        idx = slice(None) if nodes is None else np.asarray(nodes)
        theta = np.asarray(theta, dtype=float)
        if isinstance(model, SeparableModel):
            m = self._mechanical_entropy_sum(F)[idx]
            return model.rho0 * (self.node_weights[idx] * model.thermal_entropy(theta) + m)
        return self._pair_sum(F, theta, nodes, model.entropy)

    def _pair_sum(self, F, theta, nodes, fn):
        # rho0 * sum_K w_aK fn(F_K, theta_a) for the requested nodes
        full = np.zeros(self.n_nodes)
        if nodes is None:
            full[:] = theta
            mask = np.ones(self.elements.shape, dtype=bool)
        else:
            full[nodes] = theta
            sel = np.zeros(self.n_nodes, dtype=bool)
            sel[nodes] = True
            mask = sel[self.elements]
        e, b = np.nonzero(mask)
        vals = self.pair_weights[e, b] * fn(F[e], full[self.elements[e, b]])
        out = self.model.rho0 * np.bincount(self.elements[e, b], weights=vals, minlength=self.n_nodes)
        return out if nodes is None else out[nodes]

    def nodal_temperature(self, phi, tau, nodes=None, F=None) -> np.ndarray:
        """Solve Upsilon_a(phi_h, theta_a) = tau_a for theta_a (per node, decoupled)."""
        F = self.deformation_gradients(phi) if F is None else F
        model = self.model
        idx = slice(None) if nodes is None else np.asarray(nodes)
        tau = np.asarray(tau, dtype=float)
        w = self.node_weights[idx]
        if isinstance(model, SeparableModel):
            m = self._mechanical_entropy_sum(F)[idx]
            return model.thermal_entropy_inverse((tau / model.rho0 - m) / w)
        return solve_increasing(
            lambda th: self._pair_sum(F, th, nodes, model.entropy),
            lambda th: self._pair_sum(F, th, nodes, model.entropy_dtheta),
            tau,
            model.theta0,
        )

    def external_force(self, phi, bc: BoundaryConditions | None) -> np.ndarray:
        B = np.zeros((self.n_nodes, self.dim))
        if bc is None:
            return B
        if bc.body_potential_gradient is not None:
            B -= (self.model.rho0 * self.node_weights)[:, None] * bc.body_potential_gradient(phi)
        if bc.traction is not None and len(bc.traction_facets):
            B += self._facet_rule(bc.traction_facets, bc.traction, vector=True)
        return B

    def entropy_source(self, bc: BoundaryConditions | None) -> np.ndarray:
        Q = np.zeros(self.n_nodes)
        if bc is None:
            return Q
        Q += self.model.rho0 * self.node_weights * bc.entropy_source
        if bc.entropy_influx is not None and len(bc.influx_facets):
            Q += self._facet_rule(bc.influx_facets, bc.entropy_influx, vector=False)
        return Q

    def _facet_rule(self, facets, data, vector):
        # nodal rule on facets: weight Area/d at each facet node
        mesh = self.mesh
        fnodes = mesh.facets[facets]
        if callable(data):
            data = np.asarray(data(mesh.coords[fnodes].mean(axis=1)), dtype=float)
        shape = (len(facets), self.dim) if vector else (len(facets),)
        data = np.broadcast_to(np.asarray(data, dtype=float), shape)
        share = mesh.facet_areas[facets] / self.dim
        contrib = share[:, None] * data if vector else share * data
        d = self.dim
        flat = fnodes.ravel()
        if vector:
            per = np.repeat(contrib, d, axis=0)
            return np.stack(
                [np.bincount(flat, weights=per[:, j], minlength=self.n_nodes) for j in range(d)], axis=1
            )
        return np.bincount(flat, weights=np.repeat(contrib, d), minlength=self.n_nodes)

    # -- energies ---------------------------------------------------------------

    def free_energy_total(self, phi, Phi, theta) -> float:
        """W_h under the nodal quadrature."""
        F = self.deformation_gradients(phi)
        beta = self.thermal_gradients(Phi)
        A = self.model.free_energy(F[:, None], beta[:, None], theta[self.elements])
        return float(self.model.rho0 * np.sum(self.pair_weights * A))

    def internal_energy_total(self, phi, Phi, theta) -> float:
        """rho0 sum w_aK U(F_K, beta_K, eta(F_K, theta_a)), written as eta*theta + A."""
        F = self.deformation_gradients(phi)
        beta = self.thermal_gradients(Phi)
        th = theta[self.elements]
        U = self.model.entropy(F[:, None], th) * th + self.model.free_energy(F[:, None], beta[:, None], th)
        return float(self.model.rho0 * np.sum(self.pair_weights * U))

    def external_energy(self, phi, Phi, bc: BoundaryConditions | None) -> float:
        """E_h: body potential, entropy source, tractions and influx under the nodal rules."""
        if bc is None:
            return 0.0
        E = 0.0
        rw = self.model.rho0 * self.node_weights
        if bc.body_potential is not None:
            E += float(np.sum(rw * bc.body_potential(phi)))
        E -= float(np.sum(self.entropy_source(bc) * Phi))
        if bc.traction is not None and len(bc.traction_facets):
            E -= float(np.sum(self._facet_rule(bc.traction_facets, bc.traction, vector=True) * phi))
        return E
