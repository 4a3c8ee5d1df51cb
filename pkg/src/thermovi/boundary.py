"""Boundary data: time-dependent Dirichlet sets and constant external loads."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .mesh import ENTROPY_FLUX, MECH_DIRICHLET, THERMAL_DIRICHLET, TRACTION, Mesh


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed nodal values with their time derivative.

    ``value(X, t)`` and ``rate(X, t)`` receive the reference coordinates of
    ``nodes`` (shape (n, d)) and return (n, d) for a motion or (n,) for a
    thermal displacement.  The set is enforced on steps starting before
    ``until``; afterwards the nodes are free.
    """

    nodes: np.ndarray
    value: Callable[[np.ndarray, float], np.ndarray]
    rate: Callable[[np.ndarray, float], np.ndarray]
    until: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.unique(np.asarray(self.nodes, dtype=np.int64)))

    def active(self, t: float, dt: float) -> bool:
        return min(t, t + dt) < self.until - 1e-9 * abs(dt)


@dataclass(frozen=True)
class BoundaryConditions:
    """Dirichlet sets plus loads.

    Loads are constant in time: ``traction`` (vector, or callable of facet
    centroids) acts on ``traction_facets``; ``entropy_influx`` on
    ``influx_facets``; ``entropy_source`` is per unit mass; the body-force
    potential ``V_B(phi)`` is per unit mass and maps (n, d) to (n,), with
    ``body_potential_gradient`` its derivative.
    """

    mechanical: tuple[Dirichlet, ...] = ()
    thermal: tuple[Dirichlet, ...] = ()
    traction: np.ndarray | Callable | None = None
    traction_facets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    entropy_influx: float | Callable | None = None
    influx_facets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    entropy_source: float = 0.0
    body_potential: Callable[[np.ndarray], np.ndarray] | None = None
    body_potential_gradient: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def has_loads(self) -> bool:
        return (
            (self.traction is not None and len(self.traction_facets) > 0)
            or (self.entropy_influx is not None and len(self.influx_facets) > 0)
            or self.entropy_source != 0.0
            or self.body_potential_gradient is not None
        )


def gravity(g) -> tuple[Callable, Callable]:
    """Potential ``V_B = -g . phi`` and its gradient, for a uniform field ``g``."""
    g = np.asarray(g, dtype=float)
    return (lambda phi: -(phi @ g)), (lambda phi: -np.broadcast_to(g, phi.shape))


def from_labels(
    mesh: Mesh,
    *,
    mech_value=None,
    mech_rate=None,
    thermal_value=None,
    thermal_rate=None,
    until: float = np.inf,
    traction=None,
    entropy_influx=None,
    entropy_source: float = 0.0,
    body_potential=None,
    body_potential_gradient=None,
) -> BoundaryConditions:
    """Build conditions from the mesh's facet labels."""
    mech, therm = (), ()
    if mech_value is not None:
        nodes = mesh.nodes_with_label(MECH_DIRICHLET)
        if len(nodes) == 0:
            raise InvalidArgument(f"mesh has no {MECH_DIRICHLET!r} facets")
        mech = (Dirichlet(nodes, mech_value, mech_rate, until),)
    if thermal_value is not None:
        nodes = mesh.nodes_with_label(THERMAL_DIRICHLET)
        if len(nodes) == 0:
            raise InvalidArgument(f"mesh has no {THERMAL_DIRICHLET!r} facets")
        therm = (Dirichlet(nodes, thermal_value, thermal_rate, until),)
    kwargs = {}
    if traction is not None:
        kwargs.update(traction=traction, traction_facets=mesh.facets_with_label(TRACTION))
    if entropy_influx is not None:
        kwargs.update(entropy_influx=entropy_influx, influx_facets=mesh.facets_with_label(ENTROPY_FLUX))
    return BoundaryConditions(
        mechanical=mech,
        thermal=therm,
        entropy_source=entropy_source,
        body_potential=body_potential,
        body_potential_gradient=body_potential_gradient,
        **kwargs,
    )
