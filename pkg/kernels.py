"""
Kernels f(t) generating the zeta family L(f, z, x).

Shift-type kernels (Riemann, Dirichlet lambda, Dirichlet L) all have the
exponential structure

    f(-t) = sum_{r=1}^{m} c_r e^{-rt} / (1 - e^{-mt}),

and everything the engine and the operator layer need (closed forms, Taylor
data of (-t) f(t), analyticity radius, decay rate, shift reduction, the
shift form of Delta_f) is derived from (c_r, m). The Hecke kernel of the
discriminant form is the one kernel without that structure.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from errors import (
    DomainError,
    InsufficientCoefficientsError,
    InvalidCharacterError,
    RadiusExceededError,
)
from numerics import as_complex, complex_pow
from utils import read_json, write_json

logger = logging.getLogger(__name__)

DEFAULT_TAYLOR_ORDER = 20
MAX_TAYLOR_ORDER = 40
CHARACTER_TOL = 1e-12
MIN_HECKE_COEFFS = 50


# --- DIRICHLET CHARACTERS ---
@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    values: tuple

    def __post_init__(self):
        m = self.modulus
        if not isinstance(m, int) or m < 1:
            raise InvalidCharacterError(f"modulus must be a positive integer, got {m!r}")
        if len(self.values) != m:
            raise InvalidCharacterError(
                f"character table mod {m} needs {m} values, got {len(self.values)}"
            )
        values = tuple(as_complex(v, "character value") for v in self.values)
        object.__setattr__(self, "values", values)
        for n, v in enumerate(values):
            if math.gcd(n, m) > 1:
                if abs(v) > CHARACTER_TOL:
                    raise InvalidCharacterError(f"chi({n}) must vanish mod {m}")
            elif abs(abs(v) - 1.0) > CHARACTER_TOL:
                raise InvalidCharacterError(f"|chi({n})| must be 1, got {abs(v)}")
        for a in range(m):
            for b in range(m):
                if abs(values[(a * b) % m] - values[a] * values[b]) > CHARACTER_TOL:
                    raise InvalidCharacterError(
                        f"chi is not multiplicative: chi({a}*{b}) != chi({a})chi({b})"
                    )

    def __call__(self, n):
        return self.values[n % self.modulus]

    @property
    def is_real(self):
        return all(v.imag == 0 for v in self.values)


def principal_character(modulus):
    return DirichletCharacter(
        modulus,
        tuple(1.0 if math.gcd(n, modulus) == 1 else 0.0 for n in range(modulus)),
    )


BUILTIN_CHARACTERS = {
    "mod1": (1, (1,)),
    "mod3": (3, (0, 1, -1)),
    "mod4": (4, (0, 1, 0, -1)),
    "principal4": (4, (0, 1, 0, 1)),
}


def builtin_character(name):
    if name not in BUILTIN_CHARACTERS:
        raise InvalidCharacterError(
            f"unknown character {name!r}; built-ins: {sorted(BUILTIN_CHARACTERS)}"
        )
    modulus, values = BUILTIN_CHARACTERS[name]
    return DirichletCharacter(modulus, values)


def load_character(path):
    """Load {"modulus": m, "values": [[re, im], ...]} and validate it."""
    doc = read_json(path)
    try:
        modulus = int(doc["modulus"])
        values = tuple(complex(float(re), float(im)) for re, im in doc["values"])
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidCharacterError(f"malformed character table {path}: {e}") from e
    return DirichletCharacter(modulus, values)


def dump_character(chi, path):
    write_json(
        path,
        {"modulus": chi.modulus, "values": [[v.real, v.imag] for v in chi.values]},
    )


# --- CUSP FORMS ---
@dataclass(frozen=True)
class CuspFormCoefficients:
    weight: int
    coefficients: tuple

    def __post_init__(self):
        if self.weight % 2:
            raise DomainError(f"cusp form weight must be even, got {self.weight}")
        if not self.coefficients or self.coefficients[0] != 1:
            raise DomainError("normalised cusp form needs lambda_1 = 1")

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, n):
        """1-based access: coeffs[n] = lambda_n."""
        if n < 1:
            raise IndexError(n)
        return self.coefficients[n - 1]


def compute_tau_coefficients(n_max):
    """
    Ramanujan tau(1..n_max): q * prod_{k>=1} (1 - q^k)^24, exact integers.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    # prod (1 - q^k)^24 truncated at q^(n_max - 1)
    series = [1] + [0] * (n_max - 1)
    binom = [(-1) ** j * math.comb(24, j) for j in range(25)]
    for k in range(1, n_max):
        for i in range(n_max - 1, k - 1, -1):
            acc = 0
            for j in range(1, min(24, i // k) + 1):
                acc += binom[j] * series[i - k * j]
            series[i] += acc
    return CuspFormCoefficients(weight=12, coefficients=tuple(series))


def hecke_tail_bound(coeffs, t):
    """Bound sum_{n>N} |lambda_n| e^{-2 pi n t} with |lambda_n| <= 2 n^{k/2}."""
    if t <= 0:
        return math.inf
    n = len(coeffs) + 1
    half_weight = coeffs.weight / 2
    ratio = ((n + 1) / n) ** half_weight * math.exp(-2 * math.pi * t)
    if ratio >= 1:
        return math.inf
    first = 2 * n**half_weight * math.exp(-2 * math.pi * n * t)
    return first / (1 - ratio)


def hecke_phi(coeffs, t, tol=1e-12):
    """Phi(it) from the truncated expansion, refusing t where the tail matters."""
    bound = hecke_tail_bound(coeffs, t)
    if bound > tol:
        raise InsufficientCoefficientsError(
            f"{len(coeffs)} coefficients leave a tail of {bound:.2e} at t = {t}"
        )
    n = np.arange(1, len(coeffs) + 1)
    return float(np.dot(np.exp(-2 * math.pi * n * t), np.array(coeffs.coefficients, float)))


def hecke_series(coeffs, z):
    """Truncated Dirichlet series sum_{n<=N} lambda_n n^{-z}."""
    z = as_complex(z, "z")
    n = np.arange(1, len(coeffs) + 1, dtype=float)
    return complex(np.dot(np.array(coeffs.coefficients, float), complex_pow(n, -z)))


# --- POWER SERIES ---
def _series_divide(num, den, n_max):
    out = []
    for n in range(n_max + 1):
        acc = num[n]
        for k in range(1, n + 1):
            acc -= den[k] * out[n - k]
        out.append(acc / den[0])
    return out


def numeric_taylor(func, radius, n_max, check_tol=1e-8):
    """
    Taylor coefficients of an analytic func at 0 from FFT samples on |t| = r/4.

    The expansion is re-evaluated on the half-step rotated circle; a mismatch
    above `check_tol` means the radius was wrong.
    """
    rho = radius / 4.0
    samples = 64
    while samples < 2 * (n_max + 1):
        samples *= 2
    nodes = rho * np.exp(2j * np.pi * np.arange(samples) / samples)
    coeffs = np.fft.fft(np.asarray(func(nodes), dtype=complex)) / samples
    taylor = coeffs[: n_max + 1] / rho ** np.arange(n_max + 1)
    rotated = rho * np.exp(2j * np.pi * (np.arange(16) + 0.5) / 16)
    expected = np.asarray(func(rotated), dtype=complex)
    approx = np.polyval(taylor[::-1], rotated)
    # the truncated tail is what is left of the aliased coefficients
    tail = np.abs(coeffs[n_max + 1 : samples // 2]).sum()
    scale = np.max(np.abs(expected))
    if np.max(np.abs(approx - expected)) > check_tol * scale + tail:
        raise RadiusExceededError(
            f"numeric Taylor self-check failed on |t| = {rho:g}; radius too large?"
        )
    return [complex(c) for c in taylor]


# --- EXPONENTIAL STRUCTURE ---
@dataclass(frozen=True)
class ExponentialStructure:
    """f(-t) = sum_r c_r e^{-rt} / (1 - e^{-mt}), r = 1..m."""

    period: int
    coeffs: tuple  # c_1..c_m

    @property
    def powers(self):
        return np.arange(1, self.period + 1)

    @property
    def exact(self):
        return all(
            complex(c).imag == 0 and complex(c).real == int(complex(c).real)
            for c in self.coeffs
        )

    @property
    def decay_alpha(self):
        return float(next(r for r, c in zip(self.powers, self.coeffs) if c != 0))

    @property
    def radius(self):
        return 2 * math.pi / self.period

    def f(self, t):
        t = np.asarray(t, dtype=complex)
        c = np.asarray(self.coeffs, dtype=complex)
        m, r = self.period, self.powers
        with np.errstate(all="ignore"):
            left = -(np.exp(np.multiply.outer(t, r)) @ c) / np.expm1(m * t)
            right = (np.exp(np.multiply.outer(t, r - m)) @ c) / np.expm1(-m * t)
        out = np.where(t.real < 0, left, right)
        return complex(out) if out.ndim == 0 else out

    def f_neg(self, t):
        t = np.asarray(t, dtype=float)
        c = np.asarray(self.coeffs, dtype=complex)
        with np.errstate(under="ignore", over="ignore"):
            out = (np.exp(-np.multiply.outer(t, self.powers)) @ c) / -np.expm1(
                -self.period * t
            )
        return complex(out) if out.ndim == 0 else out

    def taylor(self, n_max):
        """Coefficients of (-t) f(t) = t sum_r c_r e^{rt} / (e^{mt} - 1)."""
        m = self.period
        if self.exact:
            coeffs = [Fraction(int(complex(c).real)) for c in self.coeffs]
            num = [
                sum(c * Fraction(r) ** n for r, c in zip(range(1, m + 1), coeffs))
                / math.factorial(n)
                for n in range(n_max + 1)
            ]
            den = [Fraction(m) ** (k + 1) / math.factorial(k + 1) for k in range(n_max + 1)]
            return _series_divide(num, den, n_max)
        coeffs = [complex(c) for c in self.coeffs]
        num = [
            sum(c * r**n for r, c in zip(range(1, m + 1), coeffs)) / math.factorial(n)
            for n in range(n_max + 1)
        ]
        den = [m ** (k + 1) / math.factorial(k + 1) for k in range(n_max + 1)]
        return _series_divide(num, den, n_max)

    def shift_term(self, z, x):
        """L(f,z,x) - L(f,z,x+m) = sum_r c_r (x + r - 1)^{-z}."""
        total = 0j
        for r, c in zip(range(1, self.period + 1), self.coeffs):
            if c != 0:
                total += c * complex_pow(x + r - 1.0, -z)
        return total

    def delta_shifts(self):
        """
        Shift form of Delta_f = (S^m - 1) / P(S), P(S) = sum_r c_r S^r,
        as {offset: coefficient} acting by psi(x) -> sum c psi(x + offset).
        None when P does not divide S^m - 1.
        """
        low = int(self.decay_alpha)
        high = max(r for r, c in zip(self.powers, self.coeffs) if c != 0)
        # P(S) / S^low, highest power first for numpy
        reduced = np.array(self.coeffs[low - 1 : high][::-1], dtype=complex)
        target = np.zeros(self.period + 1, dtype=complex)
        target[0], target[-1] = 1.0, -1.0
        quotient, remainder = np.polydiv(target, reduced)
        if np.max(np.abs(remainder), initial=0.0) > 1e-12:
            return None
        degree = len(quotient) - 1
        shifts = {}
        for i, coeff in enumerate(quotient):
            if abs(coeff) > 1e-12:
                shifts[degree - i - low] = complex(coeff)
        return shifts


@dataclass(frozen=True)
class ShiftReduction:
    """L(f,z,x) = L(f,z,x+step) + term(z, x)."""

    step: float
    term: Callable


# --- KERNEL ---
@dataclass(frozen=True, eq=False)
class Kernel:
    name: str
    eval_f: Callable
    eval_f_neg: Callable
    taylor: tuple
    radius: Optional[float]
    decay_alpha: float
    abscissa: float
    prefactor: Optional[Callable] = None
    shift_reduction: Optional[ShiftReduction] = None
    structure: Optional[ExponentialStructure] = None
    series: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def c(self, z):
        if self.prefactor is None:
            return 1.0 + 0j
        return self.prefactor(z)


def _structured_kernel(name, structure, params=None):
    series = structure.taylor
    return Kernel(
        name=name,
        eval_f=structure.f,
        eval_f_neg=structure.f_neg,
        taylor=tuple(complex(a) for a in series(DEFAULT_TAYLOR_ORDER)),
        radius=structure.radius,
        decay_alpha=structure.decay_alpha,
        abscissa=1.0,
        shift_reduction=ShiftReduction(
            step=float(structure.period), term=structure.shift_term
        ),
        structure=structure,
        series=series,
        params=params or {},
    )


def make_riemann_kernel():
    return _structured_kernel("riemann", ExponentialStructure(1, (1,)))


def make_lambda_kernel():
    return _structured_kernel("lambda", ExponentialStructure(2, (1, 0)))


def make_dirichlet_kernel(chi):
    if not isinstance(chi, DirichletCharacter):
        raise InvalidCharacterError(f"expected a DirichletCharacter, got {chi!r}")
    m = chi.modulus
    coeffs = tuple(chi(r) for r in range(1, m + 1))
    structure = ExponentialStructure(m, coeffs)
    return _structured_kernel(f"dirichlet_mod{m}", structure, params={"chi": chi})


def make_hecke_kernel(coeffs):
    """Phi(it) truncated at N terms; the (2 pi)^z factor is the prefactor."""
    if len(coeffs) < MIN_HECKE_COEFFS:
        raise InsufficientCoefficientsError(
            f"Hecke kernel needs N >= {MIN_HECKE_COEFFS} coefficients, got {len(coeffs)}"
        )
    lam = np.array(coeffs.coefficients, dtype=float)
    n = np.arange(1, len(coeffs) + 1)

    def eval_f_neg(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(under="ignore"):
            out = np.exp(-2 * math.pi * np.multiply.outer(t, n)) @ lam
        return complex(out) if out.ndim == 0 else out.astype(complex)

    def eval_f(t):
        # f(t) = Phi(-it); converges for Re t < 0
        t = np.asarray(t, dtype=complex)
        with np.errstate(under="ignore", over="ignore"):
            out = np.exp(2 * math.pi * np.multiply.outer(t, n)) @ lam
        return complex(out) if out.ndim == 0 else out

    return Kernel(
        name="hecke",
        eval_f=eval_f,
        eval_f_neg=eval_f_neg,
        taylor=(),
        radius=None,
        decay_alpha=2 * math.pi,
        abscissa=(coeffs.weight + 1) / 2,
        prefactor=lambda z: complex_pow(2 * math.pi, z),
        params={"coeffs": coeffs},
    )


def build_kernel(name, chi=None, tau_count=MIN_HECKE_COEFFS):
    """Kernel factory by identifier (riemann | lambda | dirichlet | hecke)."""
    if name == "riemann":
        return make_riemann_kernel()
    if name == "lambda":
        return make_lambda_kernel()
    if name == "dirichlet":
        return make_dirichlet_kernel(chi or builtin_character("mod4"))
    if name == "hecke":
        return make_hecke_kernel(compute_tau_coefficients(tau_count))
    raise DomainError(f"unknown kernel {name!r}")


# --- TAYLOR DATA ---
def kernel_taylor(kernel, n_max):
    if not 0 <= n_max <= MAX_TAYLOR_ORDER:
        raise DomainError(f"Taylor order must be in [0, {MAX_TAYLOR_ORDER}], got {n_max}")
    if kernel.series is not None:
        return [complex(a) for a in kernel.series(n_max)]
    if kernel.radius is None:
        raise DomainError(f"kernel {kernel.name} is not analytic at t = 0")
    return numeric_taylor(lambda t: -t * kernel.eval_f(t), kernel.radius, n_max)


def check_kernel(kernel, samples=32):
    """Residuals of the three Kernel invariants (None where not applicable)."""
    report = {"taylor_residual": None, "neg_agreement": None, "decay_bound": None}
    if kernel.radius is not None and kernel.taylor:
        rho = kernel.radius / 4
        t = rho * np.exp(2j * np.pi * np.arange(samples) / samples)
        exact = -t * kernel.eval_f(t)
        approx = np.polyval(np.array(kernel.taylor)[::-1], t)
        report["taylor_residual"] = float(np.max(np.abs(approx - exact) / np.abs(exact)))

        t_real = np.linspace(kernel.radius / 40, 0.95 * kernel.radius / 2, 16)
        neg = kernel.eval_f_neg(t_real)
        report["neg_agreement"] = float(
            np.max(np.abs(neg - kernel.eval_f(-t_real)) / np.abs(neg))
        )
    t_tail = np.linspace(1.0, 50.0, 99)
    with np.errstate(over="ignore"):
        scaled = np.abs(kernel.eval_f_neg(t_tail)) * np.exp(kernel.decay_alpha * t_tail)
    report["decay_bound"] = float(np.max(scaled))
    logger.debug(f"🔎 kernel {kernel.name} invariants: {report}")
    return report
