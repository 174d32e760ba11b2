"""Exception hierarchy for the zeta lab.

Every error carries the CLI exit code it maps to, so `cli` never has to
guess: 1 usage, 2 numeric failure, 3 verification failure.
"""


class ZetaLabError(Exception):
    exit_code = 2


# --- USAGE ---
class UsageError(ZetaLabError):
    exit_code = 1


# --- NUMERICAL FAILURES ---
class NumericalError(ZetaLabError):
    exit_code = 2


class NonFiniteInputError(NumericalError, ValueError):
    pass


class DomainError(NumericalError, ValueError):
    pass


class GammaPoleError(DomainError):
    pass


class PoleError(DomainError):
    pass


class ZeroBaseError(DomainError):
    pass


class BranchCutError(DomainError):
    pass


class DivergenceError(DomainError):
    pass


class ContourWindowError(DomainError):
    pass


class ContourPoleError(DomainError):
    pass


class InvalidCharacterError(DomainError):
    pass


class InsufficientCoefficientsError(DomainError):
    pass


class NoOracleError(DomainError):
    pass


class NonValidatedFormError(NumericalError):
    pass


class RadiusExceededError(NumericalError):
    pass


class StepUnderflowError(NumericalError):
    pass


class QuadratureError(NumericalError):
    def __init__(self, message, achieved_error=float("nan")):
        super().__init__(f"{message} (achieved error {achieved_error:.3e})")
        self.achieved_error = achieved_error


class ConvergenceError(NumericalError):
    def __init__(self, message, last_iterate=None):
        super().__init__(f"{message} (last iterate {last_iterate})")
        self.last_iterate = last_iterate


class BoundaryTooCloseError(NumericalError):
    pass


# --- VERIFICATION ---
class VerificationError(ZetaLabError):
    exit_code = 3

    def __init__(self, message, worst_residual=float("nan")):
        super().__init__(f"{message} (worst residual {worst_residual:.3e})")
        self.worst_residual = worst_residual
