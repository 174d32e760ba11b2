import cmath
import math

import numpy as np
import pytest

from errors import DomainError, PoleError
from hamiltonian import (
    SERIES_ORDER,
    asymptotic_target,
    branch_constant,
    convergence_order,
    delta_apply,
    delta_form,
    delta_inv_asymptotic,
    dilation_residual,
    eigen_residual,
    make_eigenstate,
    proportionality_check,
    report_to_json,
    truncation_check,
)
from kernels import (
    DirichletCharacter,
    builtin_character,
    make_dirichlet_kernel,
    make_lambda_kernel,
    make_riemann_kernel,
)
from numerics import GridSpec
from zeta_engine import hurwitz_em

RIEMANN = make_riemann_kernel()
LAMBDA = make_lambda_kernel()
CHI4 = make_dirichlet_kernel(builtin_character("mod4"))
GRID = GridSpec(1.5, 6.0, 5)
WIDE_GRID = GridSpec(2.0, 8.0, 5)


# Test 1: eigenstates and branches
def test_branch_constants():
    assert branch_constant(2, "principal") == pytest.approx(-1)
    assert branch_constant(0.5 + 1j, "conjugate") == pytest.approx(
        cmath.exp(-1j * math.pi * (-0.5 + 1j))
    )
    assert branch_constant(3, "bbm") == -1
    assert branch_constant(3, "unit") == 1
    with pytest.raises(DomainError):
        branch_constant(3, "sideways")


def test_eigenstate_is_shifted_L():
    state = make_eigenstate(RIEMANN, 3, branch="bbm")
    assert state(1.0) == pytest.approx(-hurwitz_em(3, 2.0), rel=1e-9)


def test_no_eigenstate_at_pole():
    with pytest.raises(PoleError):
        make_eigenstate(RIEMANN, 1)


# Test 2: Delta_f on eigenstates
def test_delta_riemann_bbm():
    state = make_eigenstate(RIEMANN, 3, branch="bbm")
    assert delta_apply(RIEMANN, state, 2.0) == pytest.approx(0.125, abs=1e-10)


def test_delta_lambda_unit():
    state = make_eigenstate(LAMBDA, 2, branch="unit")
    assert delta_apply(LAMBDA, state, 3.0) == pytest.approx(-1 / 9, abs=1e-10)


def test_registered_forms():
    assert delta_form(RIEMANN).kind == "shift"
    assert delta_form(RIEMANN).constant == pytest.approx(-1, abs=1e-8)
    assert delta_form(CHI4).shifts == {1: pytest.approx(-1), -1: pytest.approx(-1)}


def test_shift_form_leaves_domain():
    state = make_eigenstate(RIEMANN, 3)
    with pytest.raises(DomainError):
        delta_apply(RIEMANN, state, 0.5)


def test_complex_character_uses_derivative_series():
    chi = DirichletCharacter(5, (0, 1, 1j, -1j, -1))
    form = delta_form(make_dirichlet_kernel(chi), validate=False)
    assert form.kind == "series"
    assert len(form.series) == SERIES_ORDER + 1
    assert form.series[0] == pytest.approx(5 / (-3 - 1j))


@pytest.mark.parametrize(
    "kernel, branch, z, expected",
    [(RIEMANN, "bbm", 2.5, 1), (LAMBDA, "unit", 0.5 + 3j, -1), (RIEMANN, "unit", -1.5 + 2j, -1)],
    ids=["riemann-bbm", "lambda-unit", "riemann-left"],
)
def test_proportionality(kernel, branch, z, expected):
    report = proportionality_check(kernel, make_eigenstate(kernel, z, branch=branch), GRID)
    assert report.proportionality_constant == pytest.approx(expected, abs=1e-7)
    assert report.proportionality_spread < 1e-7


@pytest.mark.parametrize("kernel", [RIEMANN, LAMBDA], ids=lambda k: k.name)
def test_delta_of_state_is_a_pure_power(kernel):
    rng = np.random.default_rng(10)
    for _ in range(10):
        z = complex(rng.uniform(-2.0, 3.0), rng.uniform(-10.0, 10.0))
        if abs(z - 1) < 0.2:
            z += 0.5
        report = proportionality_check(kernel, make_eigenstate(kernel, z), WIDE_GRID)
        assert report.proportionality_spread < 1e-6


# Test 3: the dilation generator
def test_dilation_of_a_power():
    z = 0.5 + 14j
    residual = dilation_residual(lambda x: x ** (-z), z, GRID)
    assert residual < 1e-6


def test_dilation_detects_wrong_eigenvalue():
    z = 0.5 + 14j
    assert dilation_residual(lambda x: x ** (-z), z + 0.5, GRID) > 0.1


def test_eigen_residual():
    state = make_eigenstate(RIEMANN, 0.5 + 5j)
    report = eigen_residual(RIEMANN, state, GRID)
    assert report.residual_sup < 1e-5 * report.phi_sup
    assert report.proportionality_spread < 1e-7


@pytest.mark.parametrize("kernel", [RIEMANN, LAMBDA], ids=lambda k: k.name)
@pytest.mark.parametrize("z", [2.3 + 1.1j, 0.5 + 14.134725j])
def test_eigen_relation_on_the_wide_grid(kernel, z):
    report = eigen_residual(kernel, make_eigenstate(kernel, z), WIDE_GRID)
    assert report.residual_sup < 1e-5 * report.phi_sup


def test_report_json():
    state = make_eigenstate(RIEMANN, 2.5, branch="bbm")
    payload = report_to_json(proportionality_check(RIEMANN, state, GRID))
    assert set(payload) == {
        "kernel",
        "z",
        "branch",
        "grid",
        "residual_sup",
        "prop_const",
        "prop_spread",
        "N",
    }
    assert payload["grid"] == {"min": 1.5, "max": 6.0, "count": 5}
    assert payload["z"] == [2.5, 0.0]


# Test 4: the asymptotic inverse
@pytest.mark.parametrize("kernel", [RIEMANN, LAMBDA, CHI4], ids=lambda k: k.name)
def test_asymptotic_series_at_large_x(kernel):
    z = 0.5 + 3j
    series = delta_inv_asymptotic(kernel, z, 30.0, 10)
    target = asymptotic_target(kernel, z, 30.0, reference="oracle")
    assert abs(series - target) / abs(target) < 1e-9


def test_asymptotic_finite_at_integer_z():
    value = delta_inv_asymptotic(RIEMANN, 2, 30.0, 10)
    assert math.isfinite(abs(value))
    assert value == pytest.approx(-hurwitz_em(2, 30.0), rel=1e-9)


def test_asymptotic_guards():
    with pytest.raises(PoleError):
        delta_inv_asymptotic(RIEMANN, 1, 30.0, 4)
    with pytest.raises(DomainError):
        delta_inv_asymptotic(RIEMANN, 2, -1.0, 4)
    with pytest.raises(DomainError):
        asymptotic_target(RIEMANN, 2, 30.0, reference="guess")


def test_engine_and_oracle_targets_agree():
    z = -0.5 + 2j
    engine = asymptotic_target(LAMBDA, z, 7.0)
    oracle = asymptotic_target(LAMBDA, z, 7.0, reference="oracle")
    assert abs(engine - oracle) / abs(oracle) < 1e-8


def test_convergence_order():
    order = convergence_order(RIEMANN, 0.5, 6, (5.0, 10.0, 20.0))
    assert order == pytest.approx(5.5, abs=0.5)


@pytest.mark.parametrize("N", [4, 6])
def test_convergence_order_on_the_doubling_ladder(N):
    expected = N + 2.5 - 1
    order = convergence_order(RIEMANN, 2.5, N, (20.0, 40.0, 80.0))
    assert expected / 4 <= order <= expected * 4


def test_truncation_stays_bounded():
    values = [truncation_check(RIEMANN, 0.5, x, 6, reference="oracle") for x in (10.0, 20.0, 40.0)]
    assert max(values) < 10 * min(values)
