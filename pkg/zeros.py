"""
Zeros of L(f, z) near the critical line and the spectrum E_n = i(2 z_n - 1).

Pipeline: sample |L| along sigma + it, seed at pronounced local minima,
polish each seed with complex Newton and certify it with an argument
principle count on a small box.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from errors import BoundaryTooCloseError, ConvergenceError, DomainError, NumericalError
from hamiltonian import make_eigenstate
from numerics import as_complex
from utils import DEDUP_TOL, append_zero_cache, get_thread_count
from zeta_engine import continued_L

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-9
NEWTON_MAX_ITER = 50
NEWTON_STEP = 1e-6
CERTIFY_HALF_WIDTH = 0.05
SEED_CONTRAST = 10.0
SEED_NEIGHBOURS = 10
EDGE_SAMPLES = 32
MAX_PHASE_STEP = math.pi / 3
MAX_SUBDIVISION = 12
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class ScanWindow:
    t_min: float
    t_max: float
    step: float
    sigma: float = 0.5

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise DomainError(f"scan window needs t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if not self.step > 0:
            raise DomainError(f"scan step must be > 0, got {self.step}")

    def ordinates(self):
        count = int(math.floor((self.t_max - self.t_min) / self.step + 1e-9)) + 1
        return self.t_min + self.step * np.arange(count)


@dataclass(frozen=True)
class ZeroRecord:
    kernel: str
    z: complex
    residual: float
    eigenvalue: complex
    method: str  # scan+newton | bisection-oracle
    verified_count: int

    def as_row(self):
        return {
            "kernel": self.kernel,
            "re": self.z.real,
            "im": self.z.imag,
            "residual": self.residual,
            "E_re": self.eigenvalue.real,
            "E_im": self.eigenvalue.imag,
            "method": self.method,
            "verified_count": self.verified_count,
        }


def eigenvalue(z):
    return 1j * (2 * z - 1)


def _L(kernel, z):
    return continued_L(kernel, z, 1.0).value


# --- SCAN ---
def _abs_values(kernel, sigma, ts, threads):
    """|L(sigma + it)| for every t, computed on contiguous partitions in parallel."""
    chunks = [c for c in np.array_split(ts, max(1, threads)) if len(c)]

    def run(chunk):
        return [abs(_L(kernel, complex(sigma, t))) for t in chunk]

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(run, chunks))
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def scan_critical_line(kernel, window, threads=None):
    """Seeds sigma + it at local minima of |L| well below their neighbourhood."""
    threads = threads or get_thread_count()
    ts = window.ordinates()
    logger.info(
        f"🔭 scanning {kernel.name} on sigma={window.sigma}, t in [{window.t_min}, {window.t_max}]"
        f" ({len(ts)} samples, {threads} threads)"
    )
    values = _abs_values(kernel, window.sigma, ts, threads)
    seeds = []
    for i in range(1, len(ts) - 1):
        if not (values[i] <= values[i - 1] and values[i] <= values[i + 1]):
            continue
        lo, hi = max(0, i - SEED_NEIGHBOURS), min(len(ts), i + SEED_NEIGHBOURS + 1)
        neighbours = np.concatenate((values[lo:i], values[i + 1 : hi]))
        if values[i] * SEED_CONTRAST <= np.median(neighbours):
            seeds.append(complex(window.sigma, ts[i]))
    logger.info(f"🌱 {len(seeds)} seeds")
    return seeds


# --- CERTIFICATION ---
def argument_principle_count(kernel, center, half_width):
    """Winding number of L around the square of the given half-width."""
    center = as_complex(center, "center")
    if not half_width > 0:
        raise DomainError(f"half_width must be > 0, got {half_width}")
    h = half_width
    corners = [center + complex(-h, -h), center + complex(h, -h), center + complex(h, h), center + complex(-h, h)]

    def value(z):
        v = _L(kernel, z)
        if abs(v) < BOUNDARY_TOL:
            raise BoundaryTooCloseError(f"|L| = {abs(v):.2e} on the boundary at {z}")
        return v

    def phase_change(a, b, fa, fb, depth):
        step = np.angle(fb / fa)
        if abs(step) <= MAX_PHASE_STEP or depth >= MAX_SUBDIVISION:
            return step
        mid = 0.5 * (a + b)
        fm = value(mid)
        return phase_change(a, mid, fa, fm, depth + 1) + phase_change(mid, b, fm, fb, depth + 1)

    total = 0.0
    for start, end in zip(corners, corners[1:] + corners[:1]):
        nodes = [start + (end - start) * k / EDGE_SAMPLES for k in range(EDGE_SAMPLES + 1)]
        values = [value(z) for z in nodes]
        for a, b, fa, fb in zip(nodes, nodes[1:], values, values[1:]):
            total += phase_change(a, b, fa, fb, 0)
    count = total / (2 * math.pi)
    logger.debug(f"🧭 winding around {center} (half-width {h}): {count:.6f}")
    return int(round(count))


# --- REFINEMENT ---
def refine_newton(kernel, seed, zero_tol=ZERO_TOL, max_iter=NEWTON_MAX_ITER):
    z = as_complex(seed, "seed")
    value = _L(kernel, z)
    for _ in range(max_iter):
        if abs(value) < zero_tol:
            break
        h = NEWTON_STEP * max(abs(z), 1.0)
        slope = (_L(kernel, z + h) - _L(kernel, z - h)) / (2 * h)
        if slope == 0:
            raise ConvergenceError("Newton hit a flat point", last_iterate=z)
        z -= value / slope
        value = _L(kernel, z)
    if not abs(value) < zero_tol:
        raise ConvergenceError(
            f"Newton did not reach |L| < {zero_tol:g} in {max_iter} steps", last_iterate=z
        )
    count = argument_principle_count(kernel, z, CERTIFY_HALF_WIDTH)
    return ZeroRecord(kernel.name, z, abs(value), eigenvalue(z), "scan+newton", count)


def _zero_of(item):
    return item.z if isinstance(item, ZeroRecord) else as_complex(item, "z")


def spectrum(records):
    """[(E_n, |Im E_n|)] for records or bare zeros."""
    out = []
    for item in records:
        energy = eigenvalue(_zero_of(item))
        out.append((energy, abs(energy.imag)))
    return out


def boundary_check(kernel, record, branch="principal"):
    """
    |Psi(f, z_n, 0)| with the branch constant divided out, i.e. |L(f, z_n, 1)|.

    |C| is e^{-pi Im z} on the principal branch and is reported by
    `branch_constant`, not folded into the check.
    """
    return abs(make_eigenstate(kernel, _zero_of(record), branch).shifted_L(0.0))


# --- PIPELINE ---
def _dedupe(records):
    out = []
    for record in sorted(records, key=lambda r: (r.z.imag, r.z.real)):
        if out and abs(record.z - out[-1].z) < DEDUP_TOL:
            continue
        out.append(record)
    return out


def find_zeros(kernel, window, threads=None, zero_tol=ZERO_TOL, cache_path=None):
    """Scan, refine and certify; accepted records sorted by Im z."""
    threads = threads or get_thread_count()
    seeds = scan_critical_line(kernel, window, threads)

    def refine(seed):
        try:
            return refine_newton(kernel, seed, zero_tol)
        except NumericalError as e:
            logger.warning(f"⚠️ seed {seed} rejected: {e}")
            return None

    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(seeds) or 1))) as pool:
        refined = list(pool.map(refine, seeds))

    accepted = []
    for record in refined:
        if record is None:
            continue
        if record.verified_count != 1:
            logger.warning(
                f"⚠️ {record.z} rejected: argument principle counts {record.verified_count}"
            )
            continue
        accepted.append(record)
        logger.info(f"✅ zero {record.z} (|L| = {record.residual:.1e})")
    records = _dedupe(accepted)
    if cache_path:
        append_zero_cache(cache_path, [r.as_row() for r in records])
    return records
