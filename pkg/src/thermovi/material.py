"""Thermo-elastic materials with non-classical (wave-like) heat conduction.

Every model derives from a Helmholtz free energy per unit mass
``A(F, beta, theta)``, where ``beta`` is the gradient of the thermal
displacement and ``theta`` its rate.  From it follow

* first Piola-Kirchhoff stress  ``P = rho0 dA/dF``
* entropy per unit mass         ``eta = -dA/dtheta``   (independent of beta)
* entropy flux                  ``h = -rho0 dA/dbeta`` (independent of theta)

All functions are vectorised: ``F`` has shape ``(..., d, d)``, ``beta`` has
shape ``(..., d)`` and ``theta``/``eta`` have shape ``(...)``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidArgument,
    InvalidTemperature,
    InvertedElement,
    OutOfRangeTemperature,
    SolverFailure,
    UndefinedCoupling,
)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


def _eye_like(F):
    return np.broadcast_to(np.eye(F.shape[-1]), F.shape)


def _trace(M):
    return np.trace(M, axis1=-2, axis2=-1)


def _ddot(A, B):
    return np.einsum("...ij,...ij->...", A, B)


def solve_increasing(fun, dfun, target, x0, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Solve ``fun(x) = target`` elementwise for a strictly increasing ``fun``.

    Newton iteration safeguarded by bisection once a bracket is known; the
    bracket is grown geometrically from ``x0`` until it exists.
    """
    target = np.asarray(target, dtype=float)
    x = np.array(np.broadcast_to(x0, target.shape), dtype=float)
    lo = np.full(target.shape, -np.inf)
    hi = np.full(target.shape, np.inf)
    scale = np.maximum(np.abs(target), 1.0)
    for _ in range(max_iter):
        r = fun(x) - target
        done = np.abs(r) <= tol * scale
        if np.all(done):
            return x
        if not np.all(np.isfinite(r)):
            raise SolverFailure("temperature solve diverged", np.inf)
        lo = np.where(r < 0, np.maximum(lo, x), lo)
        hi = np.where(r > 0, np.minimum(hi, x), hi)
        slope = dfun(x)
        bracketed = np.isfinite(lo) & np.isfinite(hi)
        step = np.maximum(np.abs(x), 1.0)
        grow = np.where(r < 0, x + step, x - step)
        # unbracketed entries produce inf/nan midpoints that np.where discards
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / slope
            outside = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
            xn = np.where(outside, np.where(bracketed, 0.5 * (lo + hi), grow), xn)
        x = np.where(done, x, xn)
    r = fun(x) - target
    if np.all(np.abs(r) <= tol * scale):
        return x
    raise SolverFailure("temperature solve did not converge", np.max(np.abs(r) / scale))


class ThermoElasticModel(ABC):
    """Contract for a homogeneous thermo-elastic material.

    Subclasses provide the free energy and its derivatives.  The inverse
    ``temperature_from_entropy`` defaults to a safeguarded Newton solve; models
    with closed-form inverses override it.
    """

    rho0: float
    theta0: float
    eta0: float
    requires_positive_jacobian = False

    @abstractmethod
    def free_energy(self, F, beta, theta): ...

    @abstractmethod
    def stress(self, F, beta, theta): ...

    @abstractmethod
    def entropy(self, F, theta): ...

    @abstractmethod
    def entropy_dtheta(self, F, theta):
        """d eta / d theta = -d2A/dtheta2, strictly positive."""

    @abstractmethod
    def entropy_flux(self, beta): ...

    def heat_flux(self, beta, theta):
        return np.asarray(theta)[..., None] * self.entropy_flux(beta)

    def temperature_from_entropy(self, F, eta):
        F = np.asarray(F, dtype=float)
        eta = np.asarray(eta, dtype=float)
        return solve_increasing(
            lambda th: self.entropy(F, th),
            lambda th: self.entropy_dtheta(F, th),
            eta,
            self.theta0,
        )

    def internal_energy(self, F, beta, eta):
        theta = self.temperature_from_entropy(F, eta)
        return np.asarray(eta) * theta + self.free_energy(F, beta, theta)


class SeparableModel(ThermoElasticModel):
    """Model whose entropy splits as ``thermal(theta) + mechanical(F)``.

    The split makes both the pointwise and the nodal temperature inversions
    closed-form.
    """

    @abstractmethod
    def thermal_entropy(self, theta): ...

    @abstractmethod
    def thermal_entropy_inverse(self, s): ...

    @abstractmethod
    def mechanical_entropy(self, F): ...

    def entropy(self, F, theta):
        return self.thermal_entropy(theta) + self.mechanical_entropy(F)

    def temperature_from_entropy(self, F, eta):
        return self.thermal_entropy_inverse(np.asarray(eta) - self.mechanical_entropy(F))


@dataclass(frozen=True)
class LinearThermoElastic(SeparableModel):
    """Small-strain model, isotropic moduli.

    In 1D the stiffness is the scalar ``E``.  In 2D/3D ``C:e = lam tr(e) I + 2 mu e``
    (2D is plane strain).  If only ``lam``/``mu`` are given, the 1D effective
    stiffness is ``lam + 2 mu``.

    The model is affine in ``theta`` so nothing stops an extreme entropy from
    mapping to ``theta <= 0``; that raises :class:`OutOfRangeTemperature` unless
    ``allow_nonpositive_temperature`` is set.
    """

    rho0: float
    theta0: float
    c: float
    gamma: float
    kappa: float
    eta0: float = 0.0
    E: float | None = None
    lam: float | None = None
    mu: float | None = None
    allow_nonpositive_temperature: bool = False

    def __post_init__(self):
        if self.E is None and (self.lam is None or self.mu is None):
            raise InvalidArgument("linear model needs E or both lam and mu")
        if self.E is not None and not self.E > 0:
            raise InvalidArgument("E must be positive")
        if self.mu is not None and not self.mu > 0:
            raise InvalidArgument("mu must be positive")
        if not (self.c > 0 and self.rho0 > 0 and self.theta0 > 0):
            raise InvalidArgument("c, rho0 and theta0 must be positive")
        if self.kappa < 0:
            raise InvalidArgument("kappa must be non-negative")

    @property
    def effective_stiffness(self) -> float:
        return self.E if self.E is not None else self.lam + 2.0 * self.mu

    def strain(self, F):
        F = np.asarray(F, dtype=float)
        return 0.5 * (F + np.swapaxes(F, -1, -2)) - _eye_like(F)

    def _moduli_contract(self, e):
        d = e.shape[-1]
        if d == 1:
            return self.effective_stiffness * e
        if self.lam is None:
            raise InvalidArgument("multi-dimensional linear model needs lam and mu")
        return self.lam * _trace(e)[..., None, None] * np.eye(d) + 2.0 * self.mu * e

    def free_energy(self, F, beta, theta):
        e = self.strain(F)
        dth = np.asarray(theta, dtype=float) - self.theta0
        beta = np.asarray(beta, dtype=float)
        return (
            _ddot(e, self._moduli_contract(e)) / (2.0 * self.rho0)
            - self.c / (2.0 * self.theta0) * dth**2
            - self.gamma * dth * _trace(e)
            - dth * self.eta0
            + self.kappa / (2.0 * self.rho0) * np.sum(beta * beta, axis=-1)
        )

    def stress(self, F, beta, theta):
        e = self.strain(F)
        dth = np.asarray(theta, dtype=float) - self.theta0
        return self._moduli_contract(e) - (self.rho0 * self.gamma * dth)[..., None, None] * np.eye(e.shape[-1])

    def thermal_entropy(self, theta):
        return self.c / self.theta0 * (np.asarray(theta, dtype=float) - self.theta0) + self.eta0

    def thermal_entropy_inverse(self, s):
        theta = self.theta0 * (1.0 + (np.asarray(s, dtype=float) - self.eta0) / self.c)
        if not self.allow_nonpositive_temperature and np.any(theta <= 0):
            bad = np.flatnonzero(np.ravel(theta) <= 0)
            raise OutOfRangeTemperature(
                f"entropy maps to non-positive temperature at {len(bad)} point(s)", bad
            )
        return theta

    def mechanical_entropy(self, F):
        return self.gamma * _trace(self.strain(F))

    def entropy_dtheta(self, F, theta):
        return np.full(np.shape(theta), self.c / self.theta0)

    def entropy_flux(self, beta):
        return -self.kappa * np.asarray(beta, dtype=float)


@dataclass(frozen=True)
class NonlinearThermoElastic(SeparableModel):
    """Compressible neo-Hookean type model with logarithmic thermal terms."""

    rho0: float
    theta0: float
    mu: float
    lam: float
    gamma: float
    c: float
    kappa: float
    eta0: float = 0.0

    requires_positive_jacobian = True

    def __post_init__(self):
        if not (self.mu > 0 and self.c > 0 and self.rho0 > 0 and self.theta0 > 0):
            raise InvalidArgument("mu, c, rho0 and theta0 must be positive")
        if self.kappa < 0:
            raise InvalidArgument("kappa must be non-negative")

    @staticmethod
    def _log_jacobian(F):
        J = np.linalg.det(np.asarray(F, dtype=float))
        if np.any(J <= 0):
            k = int(np.flatnonzero(np.ravel(J) <= 0)[0])
            raise InvertedElement(None, np.ravel(J)[k])
        return np.log(J)

    def _check_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0):
            raise InvalidTemperature("nonlinear model requires theta > 0")
        return theta

    def free_energy(self, F, beta, theta):
        F = np.asarray(F, dtype=float)
        lnJ = self._log_jacobian(F)
        theta = self._check_theta(theta)
        dth = theta - self.theta0
        beta = np.asarray(beta, dtype=float)
        r = self.rho0
        return (
            self.mu / (2 * r) * _ddot(F, F)
            + self.lam / (2 * r) * lnJ**2
            - self.mu / r * lnJ
            - self.gamma * dth * lnJ
            + self.c * (dth - theta * np.log(theta / self.theta0))
            - dth * self.eta0
            + self.kappa / (2 * r) * np.sum(beta * beta, axis=-1)
        )

    def stress(self, F, beta, theta):
        F = np.asarray(F, dtype=float)
        lnJ = self._log_jacobian(F)
        theta = self._check_theta(theta)
        coef = self.lam * lnJ - self.mu - self.rho0 * self.gamma * (theta - self.theta0)
        return self.mu * F + coef[..., None, None] * np.swapaxes(np.linalg.inv(F), -1, -2)

    def thermal_entropy(self, theta):
        return self.c * np.log(self._check_theta(theta) / self.theta0) + self.eta0

    def thermal_entropy_inverse(self, s):
        return self.theta0 * np.exp((np.asarray(s, dtype=float) - self.eta0) / self.c)

    def mechanical_entropy(self, F):
        return self.gamma * self._log_jacobian(F)

    def entropy_dtheta(self, F, theta):
        return self.c / self._check_theta(theta)

    def entropy_flux(self, beta):
        return -self.kappa * np.asarray(beta, dtype=float)


# -- linear-theory wave analysis ---------------------------------------------


def _require_linear(model):
    if not isinstance(model, LinearThermoElastic):
        raise InvalidArgument("dispersion analysis needs a LinearThermoElastic model")


def phase_speeds(model: LinearThermoElastic) -> np.ndarray:
    """The four phase speeds omega/K, ordered (++, +-, -+, --).

    The first sign is the outer (direction) sign and the second the sign in
    front of the inner square root.
    """
    _require_linear(model)
    E = model.effective_stiffness
    r, t0, g, k, c = model.rho0, model.theta0, model.gamma, model.kappa, model.c
    outer = t0 * (r * g**2 + k) + c * E
    inner = math.sqrt(r**2 * t0**2 * g**4 + 2 * r * t0 * g**2 * (c * E + k * t0) + (c * E - k * t0) ** 2)
    fast = math.sqrt((outer + inner) / (2 * c * r))
    slow = math.sqrt(max(outer - inner, 0.0) / (2 * c * r))
    return np.array([fast, slow, -fast, -slow])


def dispersion_omega(model: LinearThermoElastic, K: float) -> np.ndarray:
    return float(K) * phase_speeds(model)


def max_wave_speed(model: LinearThermoElastic) -> float:
    return float(np.max(np.abs(phase_speeds(model))))


def amplitude_ratio(model: LinearThermoElastic, speed: float) -> float:
    """A_Phi / A_phi of a travelling harmonic wave with phase speed omega/K."""
    _require_linear(model)
    if model.gamma == 0:
        raise UndefinedCoupling("amplitude ratio undefined without thermo-mechanical coupling")
    if speed == 0:
        raise InvalidArgument("phase speed must be non-zero")
    return (model.effective_stiffness / model.rho0 - speed**2) / (model.gamma * speed)
