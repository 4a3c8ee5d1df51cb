"""Explicit symplectic time stepping on simplicial meshes for thermo-elastic bodies whose heat travels as waves."""

from .assembly import Discretization
from .boundary import BoundaryConditions, Dirichlet, from_labels, gravity
from .diagnostics import (
    DiagnosticsRecord,
    HarmonicReference,
    harmonic_reference,
    l2_error,
    momenta,
    total_energy,
    total_entropy,
)
from .errors import ThermoVIError
from .integrator import State, VariationalIntegrator, stable_dt
from .material import (
    LinearThermoElastic,
    NonlinearThermoElastic,
    ThermoElasticModel,
    amplitude_ratio,
    dispersion_omega,
    max_wave_speed,
    phase_speeds,
)
from .mesh import (
    Mesh,
    element_geometry,
    generate_box_tet_mesh,
    generate_rectangle_tri_mesh,
    generate_segment_mesh,
    lumped_weights,
    read_mesh,
    ring,
    write_mesh,
)

__all__ = [
    "Discretization",
    "BoundaryConditions",
    "Dirichlet",
    "from_labels",
    "gravity",
    "DiagnosticsRecord",
    "HarmonicReference",
    "harmonic_reference",
    "l2_error",
    "momenta",
    "total_energy",
    "total_entropy",
    "ThermoVIError",
    "State",
    "VariationalIntegrator",
    "stable_dt",
    "LinearThermoElastic",
    "NonlinearThermoElastic",
    "ThermoElasticModel",
    "amplitude_ratio",
    "dispersion_omega",
    "max_wave_speed",
    "phase_speeds",
    "Mesh",
    "element_geometry",
    "generate_box_tet_mesh",
    "generate_rectangle_tri_mesh",
    "generate_segment_mesh",
    "lumped_weights",
    "read_mesh",
    "ring",
    "write_mesh",
]

__version__ = "0.1.0"
