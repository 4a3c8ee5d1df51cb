import math

import numpy as np
import pytest

from thermovi.errors import (
    InvalidArgument,
    InvalidTemperature,
    InvertedElement,
    OutOfRangeTemperature,
    SolverFailure,
    UndefinedCoupling,
)
from thermovi.material import (
    LinearThermoElastic,
    NonlinearThermoElastic,
    ThermoElasticModel,
    amplitude_ratio,
    dispersion_omega,
    max_wave_speed,
    phase_speeds,
    solve_increasing,
)

from oracles import BEAM, WAVE_LINEAR


def linear(**kw):
    return LinearThermoElastic(**dict(WAVE_LINEAR, **kw))


def linear3d():
    return LinearThermoElastic(rho0=1.2, theta0=300.0, c=2.0, gamma=0.3, kappa=0.7, eta0=1.5, lam=4.0, mu=3.0)


def nonlinear():
    return NonlinearThermoElastic(**BEAM)


def random_states(model, d, n, rng):
    F = np.eye(d) + 0.15 * rng.standard_normal((n, d, d))
    beta = rng.standard_normal((n, d))
    theta = model.theta0 * (1.0 + 0.3 * rng.random(n))
    return F, beta, theta


MODELS = [(linear, 1), (linear3d, 3), (linear3d, 2), (nonlinear, 3), (nonlinear, 2), (nonlinear, 1)]


# -- closed-form values --------------------------------------------------------


def test_nonlinear_reference_energy():
    m = nonlinear()
    for d in (1, 2, 3):
        A = m.free_energy(np.eye(d), np.zeros(d), m.theta0)
        assert A == pytest.approx(m.mu * d / (2 * m.rho0), rel=1e-14)
        np.testing.assert_allclose(m.stress(np.eye(d), np.zeros(d), m.theta0), 0.0, atol=1e-12)


def test_linear_values_1d():
    m = linear()
    F = np.array([[1.01]])
    assert m.free_energy(np.eye(1), np.zeros(1), 10.0) == 0.0
    assert m.free_energy(F, np.zeros(1), 10.0) == pytest.approx(1e-3, rel=1e-12)
    assert m.stress(F, np.zeros(1), 10.0)[0, 0] == pytest.approx(0.2, rel=1e-12)
    assert m.stress(F, np.zeros(1), 11.0)[0, 0] == pytest.approx(0.1, rel=1e-12)


def test_entropy_values():
    nl = nonlinear()
    assert nl.entropy(np.eye(3), nl.theta0) == pytest.approx(nl.eta0)
    assert nl.entropy(np.eye(3), 2 * nl.theta0) == pytest.approx(nl.eta0 + 5 * math.log(2), rel=1e-14)
    lin = linear(eta0=0.7)
    assert lin.entropy(np.eye(1), 10.0) == pytest.approx(0.7)
    assert lin.entropy(np.eye(1), 11.0) == pytest.approx(0.71, rel=1e-14)


def test_temperature_inverse_values():
    nl = nonlinear()
    assert nl.temperature_from_entropy(np.eye(3), nl.eta0) == pytest.approx(nl.theta0)
    assert nl.temperature_from_entropy(np.eye(3), nl.eta0 + 5 * math.log(2)) == pytest.approx(20.0, rel=1e-14)


def test_entropy_and_heat_flux():
    m = linear()
    beta = np.array([2.0, 0.0, 0.0])
    np.testing.assert_allclose(m.entropy_flux(np.zeros(3)), 0.0)
    np.testing.assert_allclose(m.entropy_flux(beta), [-0.2, 0.0, 0.0])
    np.testing.assert_allclose(m.heat_flux(beta, 10.0), [-2.0, 0.0, 0.0])


def test_internal_energy_reference():
    lin = linear(eta0=0.3)
    assert lin.internal_energy(np.eye(1), np.zeros(1), 0.3) == pytest.approx(0.3 * 10.0)
    nl = nonlinear()
    U = nl.internal_energy(np.eye(3), np.zeros(3), nl.eta0)
    assert U == pytest.approx(nl.eta0 * nl.theta0 + 3 * nl.mu / (2 * nl.rho0), rel=1e-14)


# -- error paths -----------------------------------------------------------------


def test_nonlinear_rejects_inverted_and_cold():
    m = nonlinear()
    F = np.diag([-1.0, 1.0, 1.0])
    with pytest.raises(InvertedElement):
        m.free_energy(F, np.zeros(3), 10.0)
    with pytest.raises(InvertedElement):
        m.stress(F, np.zeros(3), 10.0)
    with pytest.raises(InvalidTemperature):
        m.free_energy(np.eye(3), np.zeros(3), 0.0)
    with pytest.raises(InvalidTemperature):
        m.entropy(np.eye(3), -1.0)


def test_linear_out_of_range_temperature():
    m = linear()
    # theta = theta0 (1 + (eta - eta0)/c) <= 0 once eta <= -c
    with pytest.raises(OutOfRangeTemperature):
        m.temperature_from_entropy(np.eye(1), -0.2)
    relaxed = linear(allow_nonpositive_temperature=True)
    assert relaxed.temperature_from_entropy(np.eye(1), -0.2) == pytest.approx(-10.0)


@pytest.mark.parametrize(
    "kw",
    [dict(E=-1.0), dict(c=0.0), dict(kappa=-0.1), dict(rho0=0.0), dict(theta0=-1.0), dict(E=None)],
)
def test_linear_parameter_validation(kw):
    with pytest.raises(InvalidArgument):
        linear(**kw)


def test_nonlinear_parameter_validation():
    with pytest.raises(InvalidArgument):
        NonlinearThermoElastic(**dict(BEAM, mu=0.0))
    with pytest.raises(InvalidArgument):
        NonlinearThermoElastic(**dict(BEAM, kappa=-1.0))


# -- thermodynamic consistency by finite differences ----------------------------


@pytest.mark.parametrize("make,d", MODELS)
def test_thermodynamic_consistency(make, d):
    m = make()
    rng = np.random.default_rng(100 + d)
    F, beta, theta = random_states(m, d, 200, rng)
    P = m.stress(F, beta, theta)
    h = 1e-6
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = h
            num = m.rho0 * (m.free_energy(F + E, beta, theta) - m.free_energy(F - E, beta, theta)) / (2 * h)
            np.testing.assert_allclose(num, P[:, i, j], rtol=1e-6, atol=1e-6 * np.abs(P).max())
    eta = m.entropy(F, theta)
    ht = 1e-5 * m.theta0
    num = -(m.free_energy(F, beta, theta + ht) - m.free_energy(F, beta, theta - ht)) / (2 * ht)
    np.testing.assert_allclose(num, eta, rtol=1e-6, atol=1e-6 * np.abs(eta).max())
    flux = m.entropy_flux(beta)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        num = -m.rho0 * (m.free_energy(F, beta + e, theta) - m.free_energy(F, beta - e, theta)) / (2 * h)
        np.testing.assert_allclose(num, flux[:, i], rtol=1e-6, atol=1e-6 * np.abs(flux).max())


@pytest.mark.parametrize("make,d", MODELS)
def test_convexity_in_temperature(make, d):
    m = make()
    rng = np.random.default_rng(7)
    F, beta, theta = random_states(m, d, 50, rng)
    expect = m.c / m.theta0 if isinstance(m, LinearThermoElastic) else m.c / theta
    ht = 1e-3 * m.theta0
    second = (
        m.free_energy(F, beta, theta + ht) - 2 * m.free_energy(F, beta, theta) + m.free_energy(F, beta, theta - ht)
    ) / ht**2
    np.testing.assert_allclose(-second, expect * np.ones_like(theta), rtol=1e-5)
    np.testing.assert_allclose(m.entropy_dtheta(F, theta), expect * np.ones_like(theta), rtol=1e-14)


@pytest.mark.parametrize("make,d", MODELS)
def test_inversion_round_trip(make, d):
    m = make()
    rng = np.random.default_rng(11)
    F, beta, theta = random_states(m, d, 100, rng)
    back = m.temperature_from_entropy(F, m.entropy(F, theta))
    np.testing.assert_allclose(back, theta, rtol=1e-12)


@pytest.mark.parametrize("make,d", MODELS)
def test_beta_and_theta_independence(make, d):
    m = make()
    rng = np.random.default_rng(3)
    F, beta, theta = random_states(m, d, 20, rng)
    beta2 = beta + rng.standard_normal(beta.shape)
    theta2 = theta * 1.2
    ht = 1e-5 * m.theta0
    # -dA/dtheta measured at two different beta values
    d1 = -(m.free_energy(F, beta, theta + ht) - m.free_energy(F, beta, theta - ht)) / (2 * ht)
    d2 = -(m.free_energy(F, beta2, theta + ht) - m.free_energy(F, beta2, theta - ht)) / (2 * ht)
    np.testing.assert_allclose(d1, d2, rtol=1e-7, atol=1e-9)
    # -rho0 dA/dbeta measured at two different temperatures
    e = np.zeros(d)
    e[0] = 1e-6
    f1 = m.free_energy(F, beta + e, theta) - m.free_energy(F, beta - e, theta)
    f2 = m.free_energy(F, beta + e, theta2) - m.free_energy(F, beta - e, theta2)
    np.testing.assert_allclose(f1, f2, rtol=1e-5, atol=1e-10)


@pytest.mark.parametrize("make,d", MODELS)
def test_internal_energy_derivative_is_temperature(make, d):
    m = make()
    rng = np.random.default_rng(5)
    F, beta, theta = random_states(m, d, 30, rng)
    eta = m.entropy(F, theta)
    h = 1e-6 * max(1.0, float(np.abs(eta).max()))
    dU = (m.internal_energy(F, beta, eta + h) - m.internal_energy(F, beta, eta - h)) / (2 * h)
    np.testing.assert_allclose(dU, theta, rtol=1e-6)


# -- generic Newton inverse --------------------------------------------------


class _CubicEntropy(ThermoElasticModel):
    """User-style model without a closed-form inverse: eta = a (theta - theta0) + b (theta - theta0)^3."""

    rho0, theta0, eta0 = 1.0, 2.0, 0.0
    a, b = 0.5, 0.25

    def free_energy(self, F, beta, theta):
        x = np.asarray(theta) - self.theta0
        return -(self.a * x**2 / 2 + self.b * x**4 / 4)

    def stress(self, F, beta, theta):
        return np.zeros(np.shape(F))

    def entropy(self, F, theta):
        x = np.asarray(theta) - self.theta0
        return self.a * x + self.b * x**3

    def entropy_dtheta(self, F, theta):
        x = np.asarray(theta) - self.theta0
        return self.a + 3 * self.b * x**2

    def entropy_flux(self, beta):
        return np.zeros(np.shape(beta))


def test_newton_fallback_round_trip():
    m = _CubicEntropy()
    theta = np.linspace(-30, 40, 101)
    back = m.temperature_from_entropy(np.eye(1), m.entropy(np.eye(1), theta))
    np.testing.assert_allclose(back, theta, rtol=1e-12, atol=1e-12)


def test_newton_reports_failure():
    # arctan never reaches 2; the bracket search runs off to huge x
    with pytest.raises(SolverFailure) as info, np.errstate(over="ignore", invalid="ignore"):
        solve_increasing(np.arctan, lambda x: 1 / (1 + x**2), 2.0, 0.0, max_iter=50)
    assert info.value.residual > 0


# -- dispersion ----------------------------------------------------------------


def test_wave_constants():
    m = linear()
    assert max_wave_speed(m) == pytest.approx(4.67379, abs=1e-5)
    s = phase_speeds(m)[0]
    assert 4.0 / s == pytest.approx(0.855837, abs=1e-6)
    assert amplitude_ratio(m, s) == pytest.approx(-3.94603, abs=1e-5)


def test_dispersion_roots_ordering():
    m = linear()
    K = 0.7
    w = dispersion_omega(m, K)
    assert w[0] > w[1] > 0 and w[2] == -w[0] and w[3] == -w[1]
    # every root satisfies the quartic (s^2 - E/rho)(s^2 - k th0/(c rho)) = g^2 th0 s^2 / c
    s2 = (w / K) ** 2
    res = (s2 - 20.0) * (s2 - 10.0) - 0.1**2 * 10.0 * s2 / 0.1
    np.testing.assert_allclose(res, 0.0, atol=1e-10)


def test_dispersion_limits():
    un = linear(gamma=0.0)
    np.testing.assert_allclose(sorted(phase_speeds(un)[:2]), [math.sqrt(10.0), math.sqrt(20.0)], rtol=1e-12)
    assert max_wave_speed(un) == pytest.approx(math.sqrt(20.0), rel=1e-12)
    adiabatic = linear(kappa=0.0)
    assert phase_speeds(adiabatic)[0] == pytest.approx(math.sqrt(21.0), rel=1e-12)
    assert max_wave_speed(adiabatic) == pytest.approx(math.sqrt(21.0), rel=1e-12)


def test_amplitude_ratio_properties():
    m = linear()
    assert amplitude_ratio(m, math.sqrt(20.0)) == pytest.approx(0.0, abs=1e-14)
    assert amplitude_ratio(m, 5.0) < 0
    with pytest.raises(UndefinedCoupling):
        amplitude_ratio(linear(gamma=0.0), 4.0)
    with pytest.raises(InvalidArgument):
        amplitude_ratio(m, 0.0)


def test_dispersion_needs_linear_model():
    with pytest.raises(InvalidArgument):
        max_wave_speed(nonlinear())
