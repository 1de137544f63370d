"""Exception hierarchy.

Every failure mode carries a short machine-readable ``code`` so that the
harness can report it in run manifests without string matching.
"""


class HartreeLabError(Exception):
    code = "error"


class WeightOverflow(HartreeLabError, OverflowError):
    code = "weight-overflow"


class SeriesNotConverged(HartreeLabError, ArithmeticError):
    code = "series-not-converged"


class DivergentIntegral(HartreeLabError, ValueError):
    code = "divergent-integral"


class DilationOffGrid(HartreeLabError, ValueError):
    code = "dilation-off-grid"


class PInfinite(HartreeLabError, ValueError):
    code = "p-infinite"


class NegativeRho(HartreeLabError, ValueError):
    code = "negative-rho"


class ScheduleInfeasible(HartreeLabError, ValueError):
    code = "schedule-infeasible"


class TailFitFailure(HartreeLabError, ArithmeticError):
    code = "tail-fit-failure"


class StepFailure(HartreeLabError, RuntimeError):
    code = "step-failure"


class NormBlowup(HartreeLabError, RuntimeError):
    code = "norm-blowup"

    def __init__(self, message, t=None, rho=None):
        super().__init__(message)
        self.t = t
        self.rho = rho


class NotConverged(HartreeLabError, RuntimeError):
    code = "not-converged"


class LadderNotConverged(NotConverged):
    code = "ladder-not-converged"


class ConfigInvalid(HartreeLabError, ValueError):
    code = "config-invalid"


class SuiteFailed(HartreeLabError, RuntimeError):
    code = "suite-failed"

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}
