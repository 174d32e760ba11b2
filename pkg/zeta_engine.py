"""
Evaluation of L(f, z, x) = (c(z) / Gamma(z)) * int_0^inf t^{z-1} e^{-(x-1)t} f(-t) dt.

Re z > 1 goes through the Mellin integral. Everything else goes through the
Hankel loop around the negative real axis,

    I(f, z, x) = (1 / 2 pi i) * int_C t^z e^{(x-1)t} f(t) dt / t,
    L(f, z, x) = Gamma(1 - z) * I(f, z, x),

with x first moved into a fixed window by the kernel's shift rule. The
Euler-Maclaurin Hurwitz sum is kept alongside as an independent oracle.
"""

import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np

from errors import (
    ContourPoleError,
    ContourWindowError,
    DivergenceError,
    DomainError,
    NoOracleError,
    NonFiniteInputError,
    PoleError,
)
from numerics import (
    QuadratureSpec,
    as_complex,
    complex_pow,
    gamma,
    integrate_panels,
    reciprocal_gamma,
)
from utils import env_float, env_int, get_thread_count

logger = logging.getLogger(__name__)

ERROR_SAFETY = 10.0
CUTOFF_NATS = 42.0  # integrand tail below e^-42 of its peak
SUBTRACTED_TERMS = 8
WINDOW_START = 2.0
DIRECT_SHIFT_STEPS = 64
DEFAULT_EM_TERMS = 40
DEFAULT_EM_ORDER = 12
EM_DIGITS = 32


def default_quadrature():
    return QuadratureSpec(rel_tol=env_float("ZHL_QUAD_TOL", 1e-12))


@dataclass(frozen=True)
class ContourSpec:
    """
    Hankel loop: circle |t| = epsilon plus two rays cut at |t| = ray_cut.

    epsilon / ray_cut left as None are derived from the kernel and z. The
    rays leave the circle at arg t = +-(pi/2 + tilt), with
    tilt = min(pi/2, tilt_budget / |Im z|) unless `ray_tilt` fixes it;
    tilt = pi/2 is the loop hugging the negative axis.
    """

    epsilon: Optional[float] = None
    ray_cut: Optional[float] = None
    circle_nodes: int = 64
    ray_spec: Optional[QuadratureSpec] = None
    tilt_budget: float = 4.0
    ray_tilt: Optional[float] = None

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if self.ray_cut is not None and self.epsilon is not None:
            if not self.ray_cut > self.epsilon:
                raise DomainError(
                    f"ray_cut must exceed epsilon, got {self.ray_cut} <= {self.epsilon}"
                )
        if self.circle_nodes < 16:
            raise DomainError(f"circle_nodes must be >= 16, got {self.circle_nodes}")
        if not self.tilt_budget > 0:
            raise DomainError(f"tilt_budget must be > 0, got {self.tilt_budget}")
        if self.ray_tilt is not None and not 0 < self.ray_tilt <= math.pi / 2:
            raise DomainError(f"ray_tilt must lie in (0, pi/2], got {self.ray_tilt}")

    def tilt(self, z):
        if self.ray_tilt is not None:
            return self.ray_tilt
        if z.imag == 0:
            return math.pi / 2
        return min(math.pi / 2, self.tilt_budget / abs(z.imag))

    def circle_radius(self, kernel):
        eps = self.epsilon or env_float("ZHL_HANKEL_EPS")
        if eps is None:
            eps = min(kernel.radius / 2, 0.5)
        if eps >= kernel.radius:
            raise ContourPoleError(
                f"epsilon = {eps} reaches the pole of t*f(t) at |t| = {kernel.radius:g}"
            )
        return eps


@dataclass(frozen=True)
class EvaluationResult:
    value: complex
    est_error: float
    method: str  # mellin | hankel | oracle | series-reduced


def _check_x(x):
    x = float(x)
    if not math.isfinite(x):
        raise NonFiniteInputError(f"x must be finite, got {x}")
    if x <= 0:
        raise DomainError(f"x must be > 0, got {x}")
    return x


def _decay_cutoff(power, rate, start):
    """Cut for rho^power e^{-rate rho}: CUTOFF_NATS below its peak on [start, inf)."""
    peak = max(start, power / rate) if power > 0 else start
    cut = peak + CUTOFF_NATS / rate
    if power > 0:
        for _ in range(20):
            cut = peak + (CUTOFF_NATS + power * math.log(cut / peak)) / rate
    return cut


def _shifted_taylor(kernel, x, count):
    """Taylor data of h(t) = e^{-(x-1)t} t f(-t) from that of (-t) f(t)."""
    a = [c * (-1) ** n for n, c in enumerate(kernel.taylor[:count])]
    out = []
    for k in range(len(a)):
        out.append(
            sum(a[j] * (1.0 - x) ** (k - j) / math.factorial(k - j) for j in range(k + 1))
        )
    return out


# --- MELLIN PATH ---
def mellin_L(kernel, z, x, spec=None, tilt_budget=4.0):
    """
    Mellin integral along the ray arg t = psi, psi = sign(Im z) (pi/2 - tilt),
    tilt = min(pi/2, tilt_budget / |Im z|); psi = 0 is the real axis.
    """
    z = as_complex(z, "z")
    x = _check_x(x)
    spec = spec or default_quadrature()
    if z.real <= 1:
        raise DomainError(f"Mellin integral needs Re z > 1, got {z}")
    if kernel.prefactor is not None and z.real <= kernel.abscissa:
        raise DomainError(
            f"{kernel.name} needs Re z > {kernel.abscissa:g} for the Mellin integral"
        )
    rate = x - 1 + kernel.decay_alpha
    if rate <= 0:
        raise DivergenceError(
            f"integrand grows: x - 1 = {x - 1:g} <= -decay_alpha = {-kernel.decay_alpha:g}"
        )
    tilt = math.pi / 2 if z.imag == 0 else min(math.pi / 2, tilt_budget / abs(z.imag))
    psi = math.copysign(math.pi / 2 - tilt, z.imag)
    w = cmath.exp(1j * psi)
    rate *= math.sin(tilt)

    def h(rho):
        # t f(-t) e^{-(x-1)t} at t = rho w
        t = rho * w
        f = kernel.eval_f_neg(rho) if psi == 0 else kernel.eval_f(-t)
        return t * np.exp(-(x - 1) * t) * f

    def integrand(rho):
        return complex_pow(rho, z - 2, arg=psi) * h(rho) * w

    norm = kernel.c(z) * reciprocal_gamma(z)
    if kernel.taylor:
        # peel off the Taylor head near 0; its integral is closed form
        split = min(1.0, kernel.radius / 2)
        if x != 1:
            split = min(split, 1.0 / abs(x - 1))
        coeffs = _shifted_taylor(kernel, x, SUBTRACTED_TERMS)

        def remainder(rho):
            head = np.polyval(np.array(coeffs[::-1]), rho * w)
            return complex_pow(rho, z - 2, arg=psi) * (h(rho) - head) * w

        closed = sum(
            c * complex_pow(split, z - 1 + k, arg=0.0) * cmath.exp(1j * psi * (z - 1 + k)) / (z - 1 + k)
            for k, c in enumerate(coeffs)
        )
        cut = _decay_cutoff(z.real - 1, rate, split)
        far, far_err = integrate_panels(
            integrand,
            split,
            cut,
            spec,
            singular_start=False,
            initial_panels=max(1, int(cut - split)),
            scale=abs(closed),
            full_output=True,
        )
        near, near_err = integrate_panels(
            remainder, 0.0, split, spec, scale=max(abs(closed), abs(far)), full_output=True
        )
        total, err = closed + near + far, near_err + far_err
    else:
        cut = _decay_cutoff(z.real - 1, rate, 1e-3)
        total, err = integrate_panels(
            integrand, 0.0, cut, spec, initial_panels=max(1, int(cut)), full_output=True
        )
    value = norm * total
    logger.debug(
        f"🧮 mellin {kernel.name} z={z} x={x}: ray arg {psi:.3f}, cut {cut:.1f}, err {err:.2e}"
    )
    return EvaluationResult(value, ERROR_SAFETY * abs(norm) * err, "mellin")


# --- HANKEL PATH ---
def contour_window(kernel):
    """x-range on which the Hankel rays converge: x > 1 - decay_alpha."""
    if kernel.radius is None:
        raise DomainError(f"{kernel.name} has no Hankel continuation (not analytic at 0)")
    return 1.0 - kernel.decay_alpha, math.inf


def hankel_I(kernel, z, x, contour=None):
    z = as_complex(z, "z")
    x = _check_x(x)
    contour = contour or ContourSpec()
    lo, hi = contour_window(kernel)
    if not lo < x < hi:
        raise ContourWindowError(
            f"x = {x} outside the contour window ({lo:g}, {hi:g}) of {kernel.name}"
        )
    spec = contour.ray_spec or default_quadrature()
    eps = contour.circle_radius(kernel)
    tilt = contour.tilt(z)
    theta = math.pi / 2 + tilt
    rate = (x - 1 + kernel.decay_alpha) * math.sin(tilt)
    cut = contour.ray_cut or _decay_cutoff(z.real - 1, rate, eps)
    if cut <= eps:
        raise DomainError(f"ray_cut {cut} must exceed epsilon {eps}")

    def ray(sign, scale=0.0):
        angle = sign * theta
        direction = complex(math.cos(angle), math.sin(angle))

        def g(rho):
            if tilt == math.pi / 2:
                f = kernel.eval_f_neg(rho)
                t = -rho
            else:
                t = rho * direction
                f = kernel.eval_f(t)
            return complex_pow(rho, z, arg=angle) * np.exp((x - 1) * t) * f / rho

        return integrate_panels(
            g,
            eps,
            cut,
            spec,
            singular_start=False,
            initial_panels=max(4, int(cut - eps)),
            scale=scale,
            full_output=True,
        )

    def circle(phi):
        t = eps * np.exp(1j * phi)
        return 1j * np.exp(z * (math.log(eps) + 1j * phi)) * np.exp((x - 1) * t) * kernel.eval_f(t)

    upper, upper_err = ray(+1)
    lower, lower_err = ray(-1, scale=abs(upper))
    loop, loop_err = integrate_panels(
        circle,
        -theta,
        theta,
        spec,
        singular_start=False,
        initial_panels=max(1, contour.circle_nodes // spec.nodes_per_panel),
        scale=abs(upper) + abs(lower),
        full_output=True,
    )
    # outgoing on the upper ray, incoming on the lower one
    value = (upper - lower + loop) / (2j * math.pi)
    err = (upper_err + lower_err + loop_err) / (2 * math.pi)
    logger.debug(
        f"🌀 hankel {kernel.name} z={z} x={x}: eps {eps:g}, tilt {tilt:.3f}, cut {cut:.1f}"
    )
    return EvaluationResult(value, ERROR_SAFETY * err, "hankel")


def _shift_sum(kernel, z, y, n):
    """sum_{k<n} term(z, y + k m) as differences of Hurwitz zeta values."""
    structure = kernel.structure
    m = structure.period
    total = 0j
    for r, c in zip(range(1, m + 1), structure.coeffs):
        if c != 0:
            a = (y + r - 1.0) / m
            total += c * (hurwitz_em(z, a) - hurwitz_em(z, a + n))
    return complex_pow(m, -z) * total


def reduce_shift(kernel, z, x, target=WINDOW_START):
    """
    Move x into [target, target + step) with L(x) = L(x + step) + term(z, x).
    Returns (reduced x, accumulated elementary terms, number of steps).

    Long downward runs are summed in closed form through Hurwitz zeta
    differences instead of term by term.
    """
    rule = kernel.shift_reduction
    if rule is None:
        raise DomainError(f"{kernel.name} has no shift reduction")
    z = as_complex(z, "z")
    correction, steps = 0j, 0
    while x < target:
        correction += rule.term(z, x)
        x += rule.step
        steps += 1
    n = int((x - target) // rule.step)
    while n > 0 and x - n * rule.step < target:
        n -= 1
    while x - n * rule.step >= target + rule.step:
        n += 1
    if n > DIRECT_SHIFT_STEPS and kernel.structure is not None:
        x -= n * rule.step
        correction -= _shift_sum(kernel, z, x, n)
    else:
        for _ in range(n):
            x -= rule.step
            correction -= rule.term(z, x)
    return x, correction, steps + n


def continued_L(kernel, z, x, *, contour=None, spec=None, force=None):
    """
    L(f, z, x) for all z != 1. `force="hankel"` takes the contour path even
    for Re z > 1.
    """
    z = as_complex(z, "z")
    x = _check_x(x)
    if z == 1:
        raise PoleError("L(f, z, x) has a pole at z = 1")
    if z.real > 1 and force != "hankel":
        return mellin_L(kernel, z, x, spec)
    if kernel.shift_reduction is None or kernel.radius is None:
        raise DomainError(f"{kernel.name} cannot be continued to Re z <= 1")
    if spec is not None:
        contour = ContourSpec(
            **{**(contour or ContourSpec()).__dict__, "ray_spec": spec}
        )
    reduced, correction, steps = reduce_shift(kernel, z, x)
    inner = hankel_I(kernel, z, reduced, contour)
    scale = gamma(1 - z)
    value = scale * inner.value + correction
    err = abs(scale) * inner.est_error + 1e-16 * steps * abs(correction)
    method = "series-reduced" if steps else "hankel"
    logger.debug(f"🔁 {kernel.name} x={x} -> {reduced} in {steps} steps ({method})")
    return EvaluationResult(value, err, method)


def L(kernel, z, **kwargs):
    """L(f, z) = L(f, z, 1)."""
    return continued_L(kernel, z, 1.0, **kwargs)


def batch_L(kernel, points, threads=None, **kwargs):
    """continued_L over (z, x) pairs, results in input order."""
    points = list(points)
    threads = threads or get_thread_count()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: continued_L(kernel, p[0], p[1], **kwargs), points))


# --- EULER-MACLAURIN ORACLE ---
def hurwitz_em(z, x, terms=None, correction_order=DEFAULT_EM_ORDER):
    """
    zeta(z, x) by Euler-Maclaurin after `terms` explicit terms.

    The sum runs at EM_DIGITS significant digits: for Re z < 0 the explicit
    terms and the tail grow like N^{1 - Re z} while zeta itself stays small.
    """
    z = as_complex(z, "z")
    x = _check_x(x)
    if z == 1:
        raise PoleError("Hurwitz zeta has a pole at z = 1")
    terms = terms or env_int("ZHL_EM_TERMS", DEFAULT_EM_TERMS)
    with mpmath.workdps(EM_DIGITS):
        s = mpmath.mpc(z.real, z.imag)
        a = mpmath.mpf(x)
        total = mpmath.fsum(mpmath.power(a + k, -s) for k in range(terms))
        base = a + terms
        total += mpmath.power(base, 1 - s) / (s - 1) + mpmath.power(base, -s) / 2
        rising = s  # (s)_{2j-1}
        for j in range(1, correction_order + 1):
            coeff = mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j)
            total += coeff * rising * mpmath.power(base, -s - 2 * j + 1)
            rising *= (s + 2 * j - 1) * (s + 2 * j)
        return complex(total)


def oracle_L(kernel, z, x, terms=None):
    """m^{-z} sum_r c_r zeta(z, (x - 1 + r) / m) for exponential-structure kernels."""
    structure = kernel.structure
    if structure is None:
        raise NoOracleError(f"no closed-form oracle for {kernel.name}")
    z = as_complex(z, "z")
    x = _check_x(x)
    m = structure.period
    total = 0j
    for r, c in enumerate(structure.coeffs, start=1):
        if c != 0:
            total += c * hurwitz_em(z, (x - 1 + r) / m, terms)
    return complex_pow(m, -z) * total


def functional_equation_residual(z, terms=None):
    """Relative residual of zeta(z) = 2 (2 pi)^{z-1} sin(pi z / 2) Gamma(1-z) zeta(1-z)."""
    z = as_complex(z, "z")
    if z.real >= 1:
        raise DomainError(f"functional equation check needs Re z < 1, got {z}")
    if z.imag == 0 and z.real <= 0 and z.real % 2 == 0:
        raise DomainError(f"z = {z.real:g} is a trivial zero; the ratio is 0/0")
    left = hurwitz_em(z, 1.0, terms)
    right = (
        2
        * complex_pow(2 * math.pi, z - 1)
        * cmath.sin(math.pi * z / 2)
        * gamma(1 - z)
        * hurwitz_em(1 - z, 1.0, terms)
    )
    return abs(left - right) / abs(left)
