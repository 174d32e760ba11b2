"""
Complex special functions and quadrature primitives.

Everything here is a pure function of its inputs. Complex quantities are
plain Python `complex` (scalars) or numpy complex arrays (integrand nodes).
"""

import cmath
import heapq
import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import (
    BranchCutError,
    DomainError,
    GammaPoleError,
    NonFiniteInputError,
    QuadratureError,
    StepUnderflowError,
    ZeroBaseError,
)

logger = logging.getLogger(__name__)

ComplexValue = complex

# --- LANCZOS (g = 7, 9 coefficients) ---
LANCZOS_G = 7.0
LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# --- QUADRATURE DEFAULTS ---
TANH_SINH_TAU_MAX = 6.0  # reaches the subnormal range next to the endpoint
TANH_SINH_LEVELS = 9
DERIVATIVE_BASE_STEP = 1e-5


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-12
    abs_tol: float = 0.0
    max_panels: int = 2000
    nodes_per_panel: int = 15

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_panels < 1:
            raise DomainError(f"max_panels must be >= 1, got {self.max_panels}")
        if self.nodes_per_panel < 2:
            raise DomainError(
                f"nodes_per_panel must be >= 2, got {self.nodes_per_panel}"
            )

    def tolerance(self, magnitude):
        return max(self.abs_tol, self.rel_tol * magnitude)


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on a piece of the half-line (0, inf)."""

    x_min: float
    x_max: float
    count: int

    def __post_init__(self):
        if not (0 < self.x_min < self.x_max):
            raise DomainError(
                f"grid needs 0 < x_min < x_max, got [{self.x_min}, {self.x_max}]"
            )
        if self.count < 2:
            raise DomainError(f"grid count must be >= 2, got {self.count}")

    def points(self):
        return np.linspace(self.x_min, self.x_max, self.count)


DEFAULT_QUADRATURE = QuadratureSpec()


# --- INPUT VALIDATION ---
def as_complex(value, name="value"):
    """Coerce to complex, rejecting NaN/Inf components."""
    try:
        z = complex(value)
    except TypeError as e:
        raise NonFiniteInputError(f"{name} is not a number: {value!r}") from e
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFiniteInputError(f"{name} must be finite, got {z}")
    return z


def is_nonpositive_integer(z):
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def _sinpi(z):
    # sin(pi z) with the real part reduced mod 2 first
    shift = 2.0 * round(z.real / 2.0)
    return cmath.sin(math.pi * complex(z.real - shift, z.imag))


# --- GAMMA FAMILY ---
def log_gamma(z):
    z = as_complex(z, "z")
    if is_nonpositive_integer(z):
        raise GammaPoleError(f"Gamma has a pole at z = {z.real:g}")
    if z.real < 0.5:
        # reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        return cmath.log(math.pi) - cmath.log(_sinpi(z)) - log_gamma(1.0 - z)
    z -= 1.0
    series = LANCZOS_COEFFS[0]
    for k, coeff in enumerate(LANCZOS_COEFFS[1:], start=1):
        series += coeff / (z + k)
    t = z + LANCZOS_G + 0.5
    return HALF_LOG_TWO_PI + (z + 0.5) * cmath.log(t) - t + cmath.log(series)


def gamma(z):
    return cmath.exp(log_gamma(z))


def reciprocal_gamma(z):
    """1/Gamma(z); entire, exactly zero at 0, -1, -2, ..."""
    z = as_complex(z, "z")
    if is_nonpositive_integer(z):
        return 0j
    return cmath.exp(-log_gamma(z))


def falling_factorial(mu, n):
    """mu (mu - 1) ... (mu - n + 1) = Gamma(mu + 1) / Gamma(mu + 1 - n)."""
    out = 1.0 + 0j
    for k in range(n):
        out *= mu - k
    return out


# --- BRANCHES ---
def complex_pow(t, z, arg=None):
    """
    t**z on the principal branch, log t = log|t| + i arg t with -pi < arg t < pi.

    `arg` overrides the argument (|arg| <= pi); the Hankel rays pass +-pi
    here to sit on either lip of the cut. Accepts scalars or numpy arrays.
    """
    z = as_complex(z, "z")
    base = np.asarray(t, dtype=complex)
    if not np.all(np.isfinite(base)):
        raise NonFiniteInputError("complex_pow base must be finite")
    if np.any(base == 0):
        raise ZeroBaseError("complex_pow is undefined at t = 0")
    if arg is None:
        if np.any((base.imag == 0) & (base.real < 0)):
            raise BranchCutError(
                "t lies on the cut (re <= 0, im = 0); pass an explicit arg"
            )
        phase = np.angle(base)
    else:
        if abs(arg) > math.pi:
            raise DomainError(f"arg override must satisfy |arg| <= pi, got {arg}")
        phase = arg
    out = np.exp(z * (np.log(np.abs(base)) + 1j * phase))
    if out.ndim == 0:
        return complex(out)
    return out


# --- QUADRATURE ---
def _tanh_sinh(g, a, c, spec, scale=0.0):
    """Double-exponential rule on [a, c]; tolerates t^sigma (sigma > -1) at a."""
    width = c - a
    previous = None
    err = math.inf
    h = 0.5
    for _ in range(TANH_SINH_LEVELS):
        n = int(math.ceil(TANH_SINH_TAU_MAX / h))
        tau = np.arange(-n, n + 1) * h
        with np.errstate(over="ignore", under="ignore"):
            u = 0.5 * math.pi * np.sinh(tau)
            # distances to each endpoint, computed without cancellation
            from_left = width / (1.0 + np.exp(-2.0 * u))
            from_right = width / (1.0 + np.exp(2.0 * u))
            x = np.where(u < 0, a + from_left, c - from_right)
            w = h * 0.25 * math.pi * width * np.cosh(tau) / np.cosh(u) ** 2
        keep = (x > a) & (x < c) & np.isfinite(w) & (w > 0)
        value = complex(np.sum(w[keep] * g(x[keep])))
        if previous is not None:
            err = abs(value - previous)
            if err <= spec.tolerance(max(abs(value), scale)):
                return value, err
        previous = value
        h /= 2.0
    return value, err


class _GaussLegendre:
    def __init__(self, nodes_per_panel):
        self.nodes, self.weights = np.polynomial.legendre.leggauss(nodes_per_panel)
        self.size = nodes_per_panel

    def panel(self, g, lo, hi):
        """Return (refined value, error estimate) for one panel."""
        mid = 0.5 * (lo + hi)
        quarter = 0.25 * (hi - lo)
        half = 2.0 * quarter
        xs = np.concatenate(
            (
                0.5 * (lo + hi) + half * self.nodes,
                0.5 * (lo + mid) + quarter * self.nodes,
                0.5 * (mid + hi) + quarter * self.nodes,
            )
        )
        ys = np.asarray(g(xs), dtype=complex)
        n = self.size
        whole = half * np.dot(self.weights, ys[:n])
        halves = quarter * (
            np.dot(self.weights, ys[n : 2 * n]) + np.dot(self.weights, ys[2 * n :])
        )
        return complex(halves), abs(complex(whole - halves))


def integrate_panels(
    g,
    a,
    b,
    spec=None,
    *,
    singular_start=True,
    initial_panels=1,
    scale=0.0,
    full_output=False,
):
    """
    Integrate a vectorised integrand g over [a, b].

    With `singular_start` the first panel [a, a + min(b - a, 1)] uses the
    double-exponential rule, so an algebraic singularity at `a` is fine.
    The rest is globally adaptive Gauss-Legendre: the piece with the worst
    error estimate is refined until the total estimate drops below
    max(abs_tol, rel_tol * max(|result|, scale)). When the double-exponential
    panel is the worst piece it is halved and its outer half goes to
    Gauss-Legendre.

    `scale` is the magnitude the result is measured against when it is one
    piece of a larger sum and may itself be close to zero.
    """
    spec = spec or DEFAULT_QUADRATURE
    if not (math.isfinite(a) and math.isfinite(b)):
        raise NonFiniteInputError("integration limits must be finite")
    if b < a:
        raise DomainError(f"integration needs a <= b, got [{a}, {b}]")
    if b == a:
        return (0j, 0.0) if full_output else 0j
    scale = abs(scale)

    head_value, head_err = 0j, 0.0
    start = a
    if singular_start:
        start = a + min(b - a, 1.0)
        head_value, head_err = _tanh_sinh(g, a, start, spec, scale)
    head_end = start

    rule = _GaussLegendre(spec.nodes_per_panel)
    heap = []
    if start < b:
        edges = np.linspace(start, b, max(1, initial_panels) + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            value, err = rule.panel(g, lo, hi)
            heapq.heappush(heap, (-err, lo, hi, value))

    panels = len(heap) + (1 if singular_start else 0)
    while True:
        total = head_value + sum(item[3] for item in heap)
        total_err = head_err + sum(-item[0] for item in heap)
        if total_err <= spec.tolerance(max(abs(total), scale)):
            break
        worst = -heap[0][0] if heap else 0.0
        can_split_head = singular_start and a + 0.25 * (head_end - a) > a
        if panels >= spec.max_panels or not (heap or can_split_head):
            logger.debug(f"❌ quadrature stalled on [{a}, {b}] after {panels} panels")
            raise QuadratureError(
                f"no convergence on [{a:g}, {b:g}] within {spec.max_panels} panels",
                achieved_error=total_err,
            )
        if can_split_head and head_err >= worst:
            mid = a + 0.5 * (head_end - a)
            value, err = rule.panel(g, mid, head_end)
            heapq.heappush(heap, (-err, mid, head_end, value))
            head_end = mid
            head_value, head_err = _tanh_sinh(g, a, head_end, spec, scale)
        else:
            _, lo, hi, _ = heapq.heappop(heap)
            mid = 0.5 * (lo + hi)
            for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
                value, err = rule.panel(g, sub_lo, sub_hi)
                heapq.heappush(heap, (-err, sub_lo, sub_hi, value))
        panels += 1

    if full_output:
        return total, total_err
    return total


# --- DIFFERENTIATION ---
def derivative(g, x, order=1, scale=1.0):
    """
    First derivative by the 4th-order central difference, two Richardson levels.

    Step h = scale * max(|x|, 1) * 1e-5; callers with noisy g raise `scale`.
    """
    if order != 1:
        raise DomainError(f"only order 1 is supported, got {order}")
    if not scale > 0:
        raise DomainError(f"scale must be > 0, got {scale}")
    x = float(x)
    h = scale * max(abs(x), 1.0) * DERIVATIVE_BASE_STEP
    if x + 0.25 * h == x:
        raise StepUnderflowError(f"difference step underflows at x = {x}")

    def central(step):
        return (
            -g(x + 2 * step) + 8 * g(x + step) - 8 * g(x - step) + g(x - 2 * step)
        ) / (12 * step)

    d1, d2, d3 = central(h), central(h / 2), central(h / 4)
    r1 = (16 * d2 - d1) / 15
    r2 = (16 * d3 - d2) / 15
    return complex((64 * r2 - r1) / 63)
