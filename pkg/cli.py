"""
zhl: evaluate the zeta family, hunt zeros, print spectra, run invariant suites.

Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 verification failure.
Complex arguments are "a+bi" / "a-bi"; negative values need the "--z=-1+0i"
spelling so argparse does not read them as flags.
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import pandas as pd

from errors import UsageError, VerificationError, ZetaLabError
from hamiltonian import (
    BRANCHES,
    eigen_residual,
    make_eigenstate,
    report_to_json,
    truncation_check,
)
from kernels import build_kernel, builtin_character, load_character, BUILTIN_CHARACTERS
from numerics import GridSpec, QuadratureSpec, gamma
from utils import (
    dumps_json,
    env_float,
    env_int,
    get_thread_count,
    load_zero_cache,
    parse_complex,
    setup_logger,
    timestamp,
    ZERO_CACHE_COLUMNS,
)
from zeta_engine import (
    ContourSpec,
    continued_L,
    functional_equation_residual,
    hankel_I,
    mellin_L,
    oracle_L,
)
from zeros import ScanWindow, eigenvalue, find_zeros

logger = logging.getLogger(__name__)

KERNELS = ("riemann", "lambda", "dirichlet", "hecke")
FORMATS = ("json", "csv", "plain")
SUITES = ("prop21", "eigen", "asymptotic", "functional", "oracle")

SUITE_DEFAULT_Z = {
    "prop21": ["1.5+0i", "2.2+0.7i", "2.8-1.3i"],
    "eigen": ["2.3+1.1i"],
    "asymptotic": ["2.5+0i"],
    "functional": ["-1+0i", "0.5+3i", "-2.5+1i", "0.3+0i"],
    "oracle": ["-1.5+2i", "0.5+5i", "2.5-3i", "3.7+0i"],
}
SUITE_DEFAULT_GRID = {"eigen": "2:8:13", "asymptotic": "10:40:3"}
PROP21_TOL = 1e-7
ORACLE_TOL = 1e-7
FUNCTIONAL_TOL = 1e-10
ASYMPTOTIC_ORDER = 4
ASYMPTOTIC_GROWTH = 4.0


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to exit 1."""

    def error(self, message):
        raise UsageError(message)


# --- CONFIGURATION ---
@dataclass
class CliConfig:
    kernel: str = "riemann"
    character: str = "mod4"
    chi_table: Optional[str] = None
    tau_count: int = 50
    quad_tol: float = 1e-12
    hankel_eps: Optional[float] = None
    em_terms: int = 40
    output_format: str = "plain"
    cache_path: Optional[str] = None
    with_timestamp: bool = True
    threads: int = 1
    branch: str = "principal"

    @classmethod
    def from_args(cls, args):
        """Flags override environment, environment overrides defaults."""

        def pick(flag, env_value):
            value = getattr(args, flag, None)
            return env_value if value is None else value

        return cls(
            kernel=getattr(args, "kernel", None) or "riemann",
            character=getattr(args, "character", None) or "mod4",
            chi_table=getattr(args, "chi_table", None),
            tau_count=pick("tau_count", 50),
            quad_tol=pick("quad_tol", env_float("ZHL_QUAD_TOL", 1e-12)),
            hankel_eps=pick("hankel_eps", env_float("ZHL_HANKEL_EPS")),
            em_terms=pick("em_terms", env_int("ZHL_EM_TERMS", 40)),
            output_format=getattr(args, "format", None) or "plain",
            cache_path=pick("cache", None) or _env_path("ZHL_ZERO_CACHE"),
            with_timestamp=not getattr(args, "no_timestamp", False),
            threads=pick("threads", get_thread_count()),
            branch=getattr(args, "branch", None) or "principal",
        )

    def validate(self):
        if self.kernel not in KERNELS:
            raise UsageError(f"--kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.character not in BUILTIN_CHARACTERS:
            raise UsageError(f"--character must be one of {sorted(BUILTIN_CHARACTERS)}")
        if self.output_format not in FORMATS:
            raise UsageError(f"--format must be one of {FORMATS}")
        if self.branch not in BRANCHES:
            raise UsageError(f"--branch must be one of {BRANCHES}")
        if not 0 < self.quad_tol < 1:
            raise UsageError(f"quad tolerance must lie in (0, 1), got {self.quad_tol}")
        if self.hankel_eps is not None and not self.hankel_eps > 0:
            raise UsageError(f"hankel epsilon must be > 0, got {self.hankel_eps}")
        if self.em_terms < 1:
            raise UsageError(f"em terms must be >= 1, got {self.em_terms}")
        if self.tau_count < 50:
            raise UsageError(f"--tau-count must be >= 50, got {self.tau_count}")
        if self.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {self.threads}")
        return self

    def build_kernel(self):
        chi = None
        if self.kernel == "dirichlet":
            chi = load_character(self.chi_table) if self.chi_table else builtin_character(self.character)
        return build_kernel(self.kernel, chi=chi, tau_count=self.tau_count)

    @property
    def quadrature(self):
        return QuadratureSpec(rel_tol=self.quad_tol)

    @property
    def contour(self):
        return ContourSpec(epsilon=self.hankel_eps, ray_spec=self.quadrature)


def _env_path(name):
    return os.getenv(name) or None


def parse_grid(text):
    try:
        lo, hi, count = text.split(":")
        return GridSpec(float(lo), float(hi), int(count))
    except ValueError as e:
        raise UsageError(f"--grid expects 'min:max:count', got {text!r}") from e


# --- OUTPUT ---
def _plain_value(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def emit(command, rows, columns, config):
    if config.output_format == "json":
        payload = {"command": command, "results": rows}
        if config.with_timestamp:
            payload["timestamp"] = timestamp()
        print(dumps_json(payload))
    elif config.output_format == "csv":
        pd.DataFrame(rows, columns=columns).to_csv(sys.stdout, index=False)
    else:
        for row in rows:
            print("  ".join(f"{key}={_plain_value(row[key])}" for key in columns))


# --- COMMANDS ---
EVAL_COLUMNS = ["kernel", "z_re", "z_im", "x", "value_re", "value_im", "est_error", "method"]


def cmd_eval(args, config):
    kernel = config.build_kernel()
    z = parse_complex(args.z)
    if args.force_path == "mellin":
        result = mellin_L(kernel, z, args.x, config.quadrature)
    else:
        result = continued_L(
            kernel,
            z,
            args.x,
            contour=config.contour,
            spec=config.quadrature,
            force=args.force_path,
        )
    row = {
        "kernel": kernel.name,
        "z_re": z.real,
        "z_im": z.imag,
        "x": float(args.x),
        "value_re": result.value.real,
        "value_im": result.value.imag,
        "est_error": result.est_error,
        "method": result.method,
    }
    emit("eval", [row], EVAL_COLUMNS, config)
    return 0


ZERO_COLUMNS = ZERO_CACHE_COLUMNS


def cmd_zeros(args, config):
    if args.t_min is None or args.t_max is None:
        raise UsageError("zeros needs --t-min and --t-max")
    kernel = config.build_kernel()
    window = ScanWindow(args.t_min, args.t_max, args.step, args.sigma)
    records = find_zeros(kernel, window, threads=config.threads, cache_path=config.cache_path)
    emit("zeros", [r.as_row() for r in records], ZERO_COLUMNS, config)
    return 0


SPECTRUM_COLUMNS = ["n", "z_re", "z_im", "E_re", "E_im", "imag_abs", "real"]


def cmd_spectrum(args, config):
    zs = []
    if args.from_cache:
        frame = load_zero_cache(args.from_cache)
        frame = frame[frame["kernel"] == config.build_kernel().name]
        zs.extend(complex(re, im) for re, im in zip(frame["re"], frame["im"]))
    zs.extend(parse_complex(text) for text in args.z or [])
    if args.t_min is not None and args.t_max is not None:
        window = ScanWindow(args.t_min, args.t_max, args.step, args.sigma)
        zs.extend(r.z for r in find_zeros(config.build_kernel(), window, threads=config.threads))
    if not zs:
        raise UsageError("spectrum needs zeros: --from-cache, --z, or --t-min/--t-max")
    rows = []
    for n, z in enumerate(sorted(zs, key=lambda z: abs(eigenvalue(z))), start=1):
        energy = eigenvalue(z)
        rows.append(
            {
                "n": n,
                "z_re": z.real,
                "z_im": z.imag,
                "E_re": energy.real,
                "E_im": energy.imag,
                "imag_abs": abs(energy.imag),
                "real": abs(energy.imag) < 2e-9,
            }
        )
    for row in rows:
        if not row["real"]:
            logger.warning(f"⚠️ non-real eigenvalue E_{row['n']} = {row['E_re']}{row['E_im']:+}i")
    emit("spectrum", rows, SPECTRUM_COLUMNS, config)
    return 0


# --- VERIFY SUITES ---
VERIFY_COLUMNS = ["suite", "kernel", "z_re", "z_im", "x", "residual", "tolerance", "passed"]


def _case(suite, kernel, z, x, residual, tol):
    return {
        "suite": suite,
        "kernel": kernel.name,
        "z_re": z.real,
        "z_im": z.imag,
        "x": x,
        "residual": float(residual),
        "tolerance": tol,
        "passed": bool(residual < tol),
    }


def _relative(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _suite_prop21(kernel, zs, grid, config):
    cases = []
    for z in zs:
        for x in (0.7, 1.0, 1.3):
            direct = mellin_L(kernel, z, x, config.quadrature).value
            contour = gamma(1 - z) * hankel_I(kernel, z, x, config.contour).value
            cases.append(_case("prop21", kernel, z, x, _relative(contour, direct), PROP21_TOL))
    return cases


def _suite_eigen(kernel, zs, grid, config):
    cases = []
    for z in zs:
        state = make_eigenstate(kernel, z, config.branch, contour=config.contour)
        report = eigen_residual(kernel, state, grid)
        tol = 1e-6 if z.real > 1 else 1e-5
        case = _case("eigen", kernel, z, None, report.residual_sup / report.phi_sup, tol)
        case["report"] = report_to_json(report)
        cases.append(case)
    return cases


def _suite_asymptotic(kernel, zs, grid, config):
    cases = []
    for z in zs:
        ladder = [truncation_check(kernel, z, x, ASYMPTOTIC_ORDER) for x in grid.points()]
        growth = max(ladder) / ladder[0] if ladder[0] else math.inf
        cases.append(_case("asymptotic", kernel, z, grid.x_max, growth, ASYMPTOTIC_GROWTH))
    return cases


def _suite_functional(kernel, zs, grid, config):
    return [
        _case("functional", kernel, z, 1.0, functional_equation_residual(z, config.em_terms), FUNCTIONAL_TOL)
        for z in zs
    ]


def _suite_oracle(kernel, zs, grid, config):
    cases = []
    for z in zs:
        for x in (0.5, 1.0, 2.5):
            value = continued_L(kernel, z, x, contour=config.contour, spec=config.quadrature).value
            reference = oracle_L(kernel, z, x, config.em_terms)
            cases.append(_case("oracle", kernel, z, x, _relative(value, reference), ORACLE_TOL))
    return cases


SUITE_RUNNERS = {
    "prop21": _suite_prop21,
    "eigen": _suite_eigen,
    "asymptotic": _suite_asymptotic,
    "functional": _suite_functional,
    "oracle": _suite_oracle,
}


def cmd_verify(args, config):
    kernel = config.build_kernel()
    zs = [parse_complex(text) for text in (args.z or SUITE_DEFAULT_Z[args.suite])]
    grid = parse_grid(args.grid or SUITE_DEFAULT_GRID.get(args.suite, "2:8:13"))
    cases = SUITE_RUNNERS[args.suite](kernel, zs, grid, config)
    for case in cases:
        mark = "✅" if case["passed"] else "❌"
        logger.info(f"{mark} {case['suite']} z={case['z_re']}{case['z_im']:+}i residual {case['residual']:.2e}")
    emit("verify", cases, VERIFY_COLUMNS, config)
    failed = [c for c in cases if not c["passed"]]
    if failed:
        worst = max(c["residual"] for c in failed)
        raise VerificationError(f"{len(failed)} of {len(cases)} {args.suite} cases failed", worst)
    return 0


# --- PARSER ---
def build_parser():
    parser = ArgumentParser(prog="zhl", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--log-level", default=None, help="overrides ZHL_LOG_LEVEL")

    common = ArgumentParser(add_help=False)
    common.add_argument("--kernel", choices=KERNELS, default="riemann")
    common.add_argument("--character", help=f"built-in character: {sorted(BUILTIN_CHARACTERS)}")
    common.add_argument("--chi-table", help="character table JSON {modulus, values}")
    common.add_argument("--tau-count", type=int, help="discriminant-form coefficients (>= 50)")
    common.add_argument("--format", choices=FORMATS, help="output format (default plain)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the JSON timestamp")
    common.add_argument("--quad-tol", type=float, help="overrides ZHL_QUAD_TOL")
    common.add_argument("--hankel-eps", type=float, help="overrides ZHL_HANKEL_EPS")
    common.add_argument("--em-terms", type=int, help="overrides ZHL_EM_TERMS")
    common.add_argument("--threads", type=int, help="overrides ZHL_THREADS")

    window = ArgumentParser(add_help=False)
    window.add_argument("--t-min", type=float)
    window.add_argument("--t-max", type=float)
    window.add_argument("--step", type=float, default=0.05)
    window.add_argument("--sigma", type=float, default=0.5)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("eval", parents=[common], help="evaluate L(f, z, x)")
    p.add_argument("--z", required=True, help='complex "a+bi"')
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--force-path", choices=("mellin", "hankel"))
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser(
        "zeros",
        parents=[common, window],
        help="find zeros on sigma + it",
        epilog=f"CSV columns: {','.join(ZERO_COLUMNS)}",
    )
    p.add_argument("--cache", help="append accepted zeros to this CSV (overrides ZHL_ZERO_CACHE)")
    p.set_defaults(handler=cmd_zeros)

    p = sub.add_parser(
        "spectrum",
        parents=[common, window],
        help="eigenvalues E_n = i(2 z_n - 1)",
        epilog=f"CSV columns: {','.join(SPECTRUM_COLUMNS)}",
    )
    p.add_argument("--from-cache", help="zero cache CSV to read")
    p.add_argument("--z", action="append", help="extra zero, repeatable")
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser(
        "verify",
        parents=[common],
        help="run an invariant suite",
        epilog=f"CSV columns: {','.join(VERIFY_COLUMNS)}",
    )
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--z", action="append", help="z value, repeatable")
    p.add_argument("--grid", help="'min:max:count'")
    p.add_argument("--branch", choices=BRANCHES)
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        setup_logger(args.log_level)
        config = CliConfig.from_args(args).validate()
        return args.handler(args, config)
    except ZetaLabError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
