import cmath
import math

import mpmath
import numpy as np
import pytest

from errors import (
    BranchCutError,
    DomainError,
    GammaPoleError,
    NonFiniteInputError,
    QuadratureError,
    ZeroBaseError,
)
from numerics import (
    GridSpec,
    QuadratureSpec,
    complex_pow,
    derivative,
    falling_factorial,
    integrate_panels,
    log_gamma,
    reciprocal_gamma,
)


# Test 1: log-gamma at the textbook points
@pytest.mark.parametrize(
    "z, expected",
    [(1, 0.0), (0.5, 0.5723649429247001), (4, math.log(6))],
)
def test_log_gamma_known_values(z, expected):
    assert log_gamma(z) == pytest.approx(expected, abs=1e-13)


def test_log_gamma_matches_mpmath_off_axis():
    for z in (2.5 + 3j, -3.7 + 0.2j, 0.1 - 20j, 30 + 15j):
        expected = complex(mpmath.gamma(z))
        assert abs(cmath.exp(log_gamma(z)) / expected - 1) < 1e-12


def test_log_gamma_pole():
    with pytest.raises(GammaPoleError):
        log_gamma(-2)


def test_reflection_formula():
    rng = np.random.default_rng(7)
    for _ in range(20):
        z = complex(rng.uniform(-5, 5), rng.uniform(-3, 3))
        product = cmath.exp(log_gamma(z) + log_gamma(1 - z))
        assert abs(product * cmath.sin(math.pi * z) / math.pi - 1) < 1e-11


# Test 2: 1/Gamma is entire and vanishes at the poles
@pytest.mark.parametrize("z, expected", [(0, 0), (1, 1), (-3, 0)])
def test_reciprocal_gamma_values(z, expected):
    assert abs(reciprocal_gamma(z) - expected) < 1e-14


def test_reciprocal_gamma_inverts_gamma():
    z = 1.3 - 2.2j
    assert abs(reciprocal_gamma(z) * cmath.exp(log_gamma(z)) - 1) < 1e-12


def test_falling_factorial_is_gamma_ratio():
    mu = -1.5 + 0.5j
    expected = complex(mpmath.gamma(mu + 1) / mpmath.gamma(mu + 1 - 4))
    assert abs(falling_factorial(mu, 4) - expected) < 1e-12


# Test 3: principal branch and the ray overrides
def test_complex_pow_basic():
    assert complex_pow(1, 3.3 + 2j) == pytest.approx(1)
    assert complex_pow(2, 3) == pytest.approx(8)
    assert complex_pow(-1, 0.5, arg=math.pi) == pytest.approx(1j)


def test_complex_pow_exponent_law():
    t = 0.7 - 1.9j
    z1, z2 = 0.3 + 2j, -1.1 + 0.4j
    product = complex_pow(t, z1) * complex_pow(t, z2)
    assert abs(complex_pow(t, z1 + z2) / product - 1) < 1e-12


def test_complex_pow_rejects_cut_and_zero():
    with pytest.raises(BranchCutError):
        complex_pow(-2.0, 0.5)
    with pytest.raises(ZeroBaseError):
        complex_pow(0.0, 0.5)
    with pytest.raises(DomainError):
        complex_pow(-2.0, 0.5, arg=4.0)


def test_complex_pow_vectorised():
    t = np.array([1.0, 2.0, 4.0])
    assert np.allclose(complex_pow(t, 2), [1, 4, 16])


def test_nan_input_rejected():
    with pytest.raises(NonFiniteInputError):
        log_gamma(complex(float("nan"), 0))


# Test 4: quadrature, including an endpoint singularity
def test_integrate_linear():
    assert integrate_panels(lambda t: t, 0.0, 1.0) == pytest.approx(0.5, abs=1e-14)


def test_integrate_endpoint_singularity():
    assert integrate_panels(lambda t: t**-0.5, 0.0, 1.0) == pytest.approx(2.0, abs=1e-10)


def test_integrate_strong_endpoint_singularity():
    value = integrate_panels(lambda t: t**-0.75, 0.0, 1.0)
    assert value == pytest.approx(4.0, abs=1e-10)


def test_integrate_refines_a_peak_in_the_singular_head():
    width = 0.01
    value = integrate_panels(lambda t: t**-0.5 + 1 / ((t - 0.5) ** 2 + width**2), 0.0, 1.0)
    expected = 2.0 + 2 / width * math.atan(0.5 / width)
    assert value == pytest.approx(expected, rel=1e-11)


def test_integrate_near_zero_against_scale():
    value, err = integrate_panels(
        np.sin, 0.0, 2 * math.pi, singular_start=False, scale=1.0, full_output=True
    )
    assert abs(value) < 1e-12
    assert err <= 1e-12


def test_integrate_gamma_two():
    value = integrate_panels(lambda t: t * np.exp(-t), 0.0, 40.0, initial_panels=8)
    assert value == pytest.approx(1.0, abs=1e-12)


def test_integrate_is_linear():
    def f(t):
        return np.sin(t)

    def g(t):
        return np.exp(-t)

    combined = integrate_panels(lambda t: 2 * f(t) - 3j * g(t), 0.0, 3.0, singular_start=False)
    parts = 2 * integrate_panels(f, 0.0, 3.0, singular_start=False) - 3j * integrate_panels(
        g, 0.0, 3.0, singular_start=False
    )
    assert abs(combined - parts) < 1e-12


def test_integrate_gives_up():
    spec = QuadratureSpec(rel_tol=1e-14, max_panels=2)
    with pytest.raises(QuadratureError) as err:
        integrate_panels(lambda t: np.sin(200 * t), 0.0, 10.0, spec, singular_start=False)
    assert err.value.achieved_error > 0


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(DomainError):
        QuadratureSpec(nodes_per_panel=1)


def test_grid_spec():
    assert list(GridSpec(1.0, 2.0, 3).points()) == [1.0, 1.5, 2.0]
    with pytest.raises(DomainError):
        GridSpec(0.0, 1.0, 3)


# Test 5: finite differences
@pytest.mark.parametrize(
    "g, x, expected, tol",
    [
        (lambda x: x**2, 3.0, 6.0, 1e-9),
        (lambda x: x**-2, 2.0, -0.25, 1e-8),
        (math.exp, 1.0, math.e, 1e-8),
    ],
)
def test_derivative(g, x, expected, tol):
    assert abs(derivative(g, x) - expected) < tol


def test_derivative_order_guard():
    with pytest.raises(DomainError):
        derivative(math.sin, 1.0, order=2)
