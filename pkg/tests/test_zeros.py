import mpmath
import pytest

from errors import BoundaryTooCloseError, DomainError
from kernels import (
    builtin_character,
    make_dirichlet_kernel,
    make_lambda_kernel,
    make_riemann_kernel,
)
from utils import load_zero_cache
from zeros import (
    ScanWindow,
    ZeroRecord,
    argument_principle_count,
    boundary_check,
    eigenvalue,
    find_zeros,
    refine_newton,
    scan_critical_line,
    spectrum,
)
from zeros import _dedupe

RIEMANN = make_riemann_kernel()
LAMBDA = make_lambda_kernel()
CHI4 = make_dirichlet_kernel(builtin_character("mod4"))
FIRST_ZERO = 0.5 + 14.134725141734693j


# Test 1: the scan window
def test_scan_window():
    assert list(ScanWindow(1.0, 2.0, 0.25).ordinates()) == [1.0, 1.25, 1.5, 1.75, 2.0]
    with pytest.raises(DomainError):
        ScanWindow(3.0, 2.0, 0.1)
    with pytest.raises(DomainError):
        ScanWindow(1.0, 2.0, 0.0)


def test_scan_seeds_near_known_zeros():
    seeds = scan_critical_line(RIEMANN, ScanWindow(10.0, 30.0, 0.1), threads=4)
    expected = [14.134725, 21.022040, 25.010858]
    assert len(seeds) == 3
    for seed, t in zip(seeds, expected):
        assert abs(seed.imag - t) < 0.1


# Test 2: certification and refinement
def test_argument_principle():
    assert argument_principle_count(RIEMANN, FIRST_ZERO, 0.05) == 1
    assert argument_principle_count(RIEMANN, 0.5 + 17j, 0.05) == 0


def test_argument_principle_boundary_guard():
    with pytest.raises(BoundaryTooCloseError):
        argument_principle_count(RIEMANN, FIRST_ZERO - 0.05, 0.05)


def test_refine_newton():
    record = refine_newton(RIEMANN, 0.5 + 14.1j)
    assert abs(record.z - FIRST_ZERO) < 1e-8
    assert record.residual < 1e-9
    assert record.verified_count == 1
    assert record.method == "scan+newton"
    assert record.eigenvalue == pytest.approx(-2 * FIRST_ZERO.imag)


# Test 3: the pipeline
def test_find_riemann_zeros():
    records = find_zeros(RIEMANN, ScanWindow(10.0, 30.0, 0.1), threads=4)
    ordinates = [r.z.imag for r in records]
    assert ordinates == pytest.approx([14.134725, 21.022040, 25.010858], abs=1e-6)
    assert all(abs(r.z.real - 0.5) < 1e-8 for r in records)


def test_lambda_zeros_coincide_with_riemann():
    window = ScanWindow(10.0, 30.0, 0.1)
    riemann = [r.z for r in find_zeros(RIEMANN, window, threads=4)]
    lam = [r.z for r in find_zeros(LAMBDA, window, threads=4)]
    assert len(lam) == len(riemann) == 3
    for a, b in zip(lam, riemann):
        assert abs(a - b) < 1e-6


def test_halving_the_step_keeps_every_zero():
    coarse = find_zeros(RIEMANN, ScanWindow(10.0, 30.0, 0.1), threads=4)
    fine = find_zeros(RIEMANN, ScanWindow(10.0, 30.0, 0.05), threads=4)
    for record in coarse:
        assert min(abs(record.z - other.z) for other in fine) < 1e-8
    coarse_seeds = scan_critical_line(RIEMANN, ScanWindow(10.0, 30.0, 0.1), threads=4)
    fine_seeds = scan_critical_line(RIEMANN, ScanWindow(10.0, 30.0, 0.05), threads=4)
    for seed in coarse_seeds:
        assert min(abs(seed - other) for other in fine_seeds) < 0.1


def test_no_zeros_below_fourteen():
    assert find_zeros(RIEMANN, ScanWindow(2.0, 10.0, 0.1), threads=2) == []


def test_chi4_first_zero():
    records = find_zeros(CHI4, ScanWindow(4.0, 8.0, 0.1), threads=2)
    assert len(records) == 1
    assert records[0].z.imag == pytest.approx(6.020949, abs=1e-6)
    assert records[0].kernel == "dirichlet_mod4"


def test_cache_is_deduplicated(tmp_path):
    path = tmp_path / "zeros.csv"
    window = ScanWindow(5.0, 7.0, 0.1)
    find_zeros(CHI4, window, threads=2, cache_path=path)
    find_zeros(CHI4, window, threads=2, cache_path=path)
    frame = load_zero_cache(path)
    assert len(frame) == 1
    assert frame.loc[0, "im"] == pytest.approx(6.020949, abs=1e-6)


def test_dedupe_keeps_first_of_close_records():
    a = ZeroRecord("riemann", 0.5 + 14.13j, 1e-12, eigenvalue(0.5 + 14.13j), "scan+newton", 1)
    b = ZeroRecord("riemann", 0.5 + (14.13 + 1e-9) * 1j, 1e-12, a.eigenvalue, "scan+newton", 1)
    c = ZeroRecord("riemann", 0.5 + 21.02j, 1e-12, eigenvalue(0.5 + 21.02j), "scan+newton", 1)
    assert _dedupe([c, b, a]) == [a, c]


# Test 4: spectrum and the boundary condition
def test_spectrum_is_real_on_the_critical_line():
    (energy, imag), = spectrum([FIRST_ZERO])
    assert energy.real == pytest.approx(-2 * FIRST_ZERO.imag)
    assert imag == pytest.approx(0, abs=1e-12)


def test_spectrum_off_line():
    (energy, imag), = spectrum([0.7 + 3j])
    assert energy == pytest.approx(-6 + 0.4j)
    assert imag == pytest.approx(0.4)


def test_boundary_check_at_a_zero():
    record = refine_newton(RIEMANN, 0.5 + 14.1j)
    assert boundary_check(RIEMANN, record) < 1e-8
    assert boundary_check(RIEMANN, 0.5 + 17j) > 1e-3


def test_boundary_check_ignores_the_branch_constant():
    for z in (0.5 + 30j, 0.8 + 10j):
        expected = abs(complex(mpmath.zeta(z)))
        for branch in ("principal", "bbm", "unit"):
            assert boundary_check(RIEMANN, z, branch) == pytest.approx(expected, rel=1e-8)
    assert boundary_check(RIEMANN, 0.5 + 30j) > 0.1


def test_boundary_check_lambda():
    record = refine_newton(LAMBDA, 0.5 + 14.1j)
    assert boundary_check(LAMBDA, record) < 1e-8
    assert boundary_check(LAMBDA, record, "unit") < 1e-8
