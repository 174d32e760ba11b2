"""
Operator side: Delta_f, the eigenstates Psi(f, z, x) = C(z) L(f, z, x + 1),
the dilation generator xp + px and the asymptotic series of Delta_f^{-1} x^{-z}.

Delta_f acts through the shift S psi(x) = psi(x + 1). For an exponential
structure f(-t) = sum_r c_r e^{-rt} / (1 - e^{-mt}),

    Delta_f = (S^m - 1) / P(S),   P(S) = sum_r c_r S^r,

which is a finite shift combination whenever P divides S^m - 1, and a
differential series sum_n R_n psi^(n) otherwise.
"""

import cmath
import logging
import math
import threading
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from errors import DomainError, NonValidatedFormError, PoleError
from kernels import Kernel, make_riemann_kernel
from numerics import GridSpec, as_complex, complex_pow, derivative, falling_factorial
from zeta_engine import continued_L, hurwitz_em

logger = logging.getLogger(__name__)

BRANCHES = ("principal", "conjugate", "bbm", "unit")
CHECK_Z = 2.5
CHECK_GRID = GridSpec(2.0, 5.0, 7)
SHIFT_FORM_TOL = 1e-8
SERIES_FORM_TOL = 1e-4
SERIES_ORDER = 6
JET_HALF_WIDTH = 5
DERIVATIVE_SCALE = 500.0


def branch_constant(z, branch="principal"):
    """C(z), the reading of (-1)^{z-1} selected by `branch`."""
    if branch == "principal":
        return cmath.exp(1j * math.pi * (z - 1))
    if branch == "conjugate":
        return cmath.exp(-1j * math.pi * (z - 1))
    if branch == "bbm":
        return -1.0 + 0j
    if branch == "unit":
        return 1.0 + 0j
    raise DomainError(f"unknown branch {branch!r}; choose from {BRANCHES}")


@dataclass(frozen=True, eq=False)
class Eigenstate:
    kernel: Kernel
    z: complex
    branch: str
    branch_constant: complex
    options: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.branch_constant * self.shifted_L(x)

    def shifted_L(self, x):
        """L(f, z, x + 1), the state without its branch constant."""
        return continued_L(self.kernel, self.z, x + 1, **self.options).value


def make_eigenstate(kernel, z, branch="principal", **options):
    z = as_complex(z, "z")
    if z == 1:
        raise PoleError("no eigenstate at z = 1")
    return Eigenstate(kernel, z, branch, branch_constant(z, branch), options)


# --- DELTA_F FORMS ---
@dataclass(frozen=True)
class DeltaForm:
    kind: str  # shift | series
    shifts: Optional[dict] = None  # offset -> coefficient
    series: Optional[tuple] = None  # R_0..R_N, Delta psi = sum R_n psi^(n)
    constant: Optional[complex] = None  # Delta L(x + 1) x^z at registration


_forms = weakref.WeakKeyDictionary()
_forms_lock = threading.Lock()


def _derivative_series(structure, order):
    """Taylor data of (e^{mt} - 1) / sum_r c_r e^{rt}, cancelling the common t^k."""
    m = structure.period
    exact = structure.exact
    one = Fraction(1) if exact else 1.0
    coeffs = [Fraction(int(complex(c).real)) if exact else complex(c) for c in structure.coeffs]
    extra = 2
    num = [one * 0] + [one * m**n / math.factorial(n) for n in range(1, order + extra + 1)]
    den = [
        sum(c * one * r**n for r, c in zip(range(1, m + 1), coeffs)) / math.factorial(n)
        for n in range(order + extra + 1)
    ]
    lead = next((k for k, d in enumerate(den) if abs(d) > 1e-14), None)
    if lead is None or lead > 1:
        raise NonValidatedFormError("Delta_f has no differential series at t = 0")
    num, den = num[lead:], den[lead:]
    out = []
    for n in range(order + 1):
        acc = num[n] - sum(den[k] * out[n - k] for k in range(1, n + 1))
        out.append(acc / den[0])
    return tuple(complex(r) for r in out)


def _derivative_jet(psi, x, order):
    """psi^(0..order)(x) from an interpolating polynomial on 2M+1 equispaced nodes."""
    half = JET_HALF_WIDTH
    step = min(0.2, x / (half + 1))
    u = np.arange(-half, half + 1, dtype=float)
    values = np.array([psi(x + step * k) for k in u], dtype=complex)
    fit = np.polynomial.polynomial.polyfit(u, values.real, 2 * half) + 1j * (
        np.polynomial.polynomial.polyfit(u, values.imag, 2 * half)
    )
    return [fit[k] * math.factorial(k) / step**k for k in range(order + 1)]


def _apply(form, psi, x):
    if form.kind == "shift":
        low = x + min(form.shifts)
        if low <= 0:
            raise DomainError(f"Delta_f needs psi at {low:g}, outside (0, inf)")
        return sum(c * psi(x + off) for off, c in sorted(form.shifts.items()))
    jet = _derivative_jet(psi, x, len(form.series) - 1)
    return sum(r * d for r, d in zip(form.series, jet))


def _validate(kernel, form):
    def psi(x):
        return continued_L(kernel, CHECK_Z, x + 1).value

    xs = CHECK_GRID.points()
    q = np.array([_apply(form, psi, x) * complex_pow(x, CHECK_Z) for x in xs])
    mean = complex(np.mean(q))
    spread = float(np.max(np.abs(q - mean)) / abs(mean)) if mean else math.inf
    tol = SHIFT_FORM_TOL if form.kind == "shift" else SERIES_FORM_TOL
    if not spread < tol:
        raise NonValidatedFormError(
            f"{form.kind} form of Delta_f for {kernel.name} fails the grid check: spread {spread:.2e}"
        )
    logger.info(f"✅ Delta_f for {kernel.name}: {form.kind} form, constant {mean:.6g}")
    return DeltaForm(form.kind, form.shifts, form.series, mean)


def delta_form(kernel, validate=True):
    """Registered (and by default grid-validated) Delta_f of a kernel."""
    with _forms_lock:
        cached = _forms.get(kernel)
    if cached is not None and (cached.constant is not None or not validate):
        return cached
    structure = kernel.structure
    if structure is None:
        raise NonValidatedFormError(f"no Delta_f form for {kernel.name}")
    shifts = structure.delta_shifts()
    if shifts:
        form = DeltaForm("shift", shifts=shifts)
    else:
        form = DeltaForm("series", series=_derivative_series(structure, SERIES_ORDER))
        logger.warning(f"⚠️ {kernel.name}: no shift form, using the derivative series")
    if validate:
        form = _validate(kernel, form)
    with _forms_lock:
        _forms[kernel] = form
    return form


def delta_apply(kernel, psi, x):
    return _apply(delta_form(kernel), psi, float(x))


# --- REPORTS ---
@dataclass
class OperatorReport:
    kernel: str
    z: complex
    branch: str
    grid: GridSpec
    residual_sup: Optional[float] = None
    proportionality_constant: Optional[complex] = None
    proportionality_spread: Optional[float] = None
    truncation: Optional[int] = None
    phi_sup: Optional[float] = None


def _proportionality(z, xs, phi):
    q = phi * complex_pow(xs, z)
    mean = complex(np.mean(q))
    spread = float(np.max(np.abs(q - mean)) / abs(mean)) if mean else math.inf
    return mean, spread


def proportionality_check(kernel, state, grid):
    """q(x) = (Delta_f Psi)(x) x^z should not depend on x."""
    xs = grid.points()
    phi = np.array([delta_apply(kernel, state, x) for x in xs])
    mean, spread = _proportionality(state.z, xs, phi)
    logger.info(f"📐 {kernel.name} z={state.z}: constant {mean:.6g}, spread {spread:.2e}")
    return OperatorReport(
        kernel.name,
        state.z,
        state.branch,
        grid,
        proportionality_constant=mean,
        proportionality_spread=spread,
        phi_sup=float(np.max(np.abs(phi))),
    )


def dilation_residual(phi, z, grid, scale=DERIVATIVE_SCALE):
    """sup_x |-i(2x phi' + phi) - i(2z - 1) phi| over the grid."""
    z = as_complex(z, "z")
    worst = 0.0
    for x in grid.points():
        value = phi(x)
        slope = derivative(phi, x, scale=scale)
        generator = -1j * (2 * x * slope + value)
        worst = max(worst, abs(generator - 1j * (2 * z - 1) * value))
    return worst


def eigen_residual(kernel, state, grid):
    """
    Eigen-relation in the conjugated form Delta_f (H Psi - i(2z-1) Psi) = 0:
    the dilation residual of phi = Delta_f Psi.
    """

    def phi(x):
        return delta_apply(kernel, state, x)

    report = proportionality_check(kernel, state, grid)
    report.residual_sup = dilation_residual(phi, state.z, grid)
    logger.info(
        f"🔬 {kernel.name} z={state.z}: residual {report.residual_sup:.2e}"
        f" against sup|phi| {report.phi_sup:.2e}"
    )
    return report


# --- ASYMPTOTIC SERIES ---
def delta_inv_asymptotic(kernel, z, x, N):
    """
    sum_{n<N} a_n (-1)^n x^{1-z-n} Gamma(2-z) / ((1-z) Gamma(2-z-n)).

    The gamma ratio is the falling factorial (1-z)_n, so every term is finite
    at integer z.
    """
    z = as_complex(z, "z")
    x = float(x)
    if z == 1:
        raise PoleError("asymptotic series has a pole at z = 1")
    if x <= 0:
        raise DomainError(f"x must be > 0, got {x}")
    if not 0 <= N <= len(kernel.taylor):
        raise DomainError(f"N must lie in [0, {len(kernel.taylor)}], got {N}")
    total = 0j
    for n in range(N):
        a = kernel.taylor[n]
        if a == 0:
            continue
        ratio = 1 / (1 - z) if n == 0 else falling_factorial(-z, n - 1)
        total += a * (-1) ** n * ratio * complex_pow(x, 1 - z - n)
    return total


_riemann = make_riemann_kernel()


def asymptotic_target(kernel, z, x, reference="engine"):
    """
    Exact Delta_f^{-1} x^{-z} = -m^{-z} sum_r c_r zeta(z, (x + m - r) / m).

    `reference` picks how zeta(z, .) is computed: "engine" (continued_L on
    the Riemann kernel) or "oracle" (Euler-Maclaurin).
    """
    structure = kernel.structure
    if structure is None:
        raise DomainError(f"no exact Delta_f^-1 x^-z for {kernel.name}")
    if reference not in ("engine", "oracle"):
        raise DomainError(f"reference must be 'engine' or 'oracle', got {reference!r}")
    z = as_complex(z, "z")
    m = structure.period
    total = 0j
    for r, c in enumerate(structure.coeffs, start=1):
        if c == 0:
            continue
        shifted = (x + m - r) / m
        if reference == "engine":
            total += c * continued_L(_riemann, z, shifted).value
        else:
            total += c * hurwitz_em(z, shifted)
    return -complex_pow(m, -z) * total


def truncation_check(kernel, z, x, N, reference="engine"):
    """|s_N(x) - Delta_f^{-1} x^{-z}| x^N; bounded along x -> inf when the series is asymptotic."""
    error = abs(delta_inv_asymptotic(kernel, z, x, N) - asymptotic_target(kernel, z, x, reference))
    return error * float(x) ** N


def convergence_order(kernel, z, N, xs, reference="oracle"):
    """Least-squares slope of -log|error| against log x."""
    xs = np.asarray(xs, dtype=float)
    errors = np.array(
        [
            abs(delta_inv_asymptotic(kernel, z, x, N) - asymptotic_target(kernel, z, x, reference))
            for x in xs
        ]
    )
    slope, _ = np.polyfit(np.log(xs), np.log(errors), 1)
    return float(-slope)


def report_to_json(report):
    def pair(value):
        return None if value is None else [value.real, value.imag]

    return {
        "kernel": report.kernel,
        "z": pair(report.z),
        "branch": report.branch,
        "grid": {"min": report.grid.x_min, "max": report.grid.x_max, "count": report.grid.count},
        "residual_sup": report.residual_sup,
        "prop_const": pair(report.proportionality_constant),
        "prop_spread": report.proportionality_spread,
        "N": report.truncation,
    }
