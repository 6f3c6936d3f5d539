"""Exception hierarchy shared by all phdisc modules."""


class PhdiscError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(PhdiscError):
    pass


class SingularMatrix(PhdiscError):
    pass


class SolverBreakdown(PhdiscError):
    pass


class RankDeficientConstraint(PhdiscError):
    pass


class NonPositiveCoefficient(PhdiscError):
    pass


class QuadratureFailure(PhdiscError):
    pass


class QuadratureOrderTooLow(PhdiscError):
    pass


class TraceUnavailable(PhdiscError):
    pass


class NonQuadraticPotential(PhdiscError):
    pass


class InsufficientData(PhdiscError):
    pass


class OutOfMemory(PhdiscError):
    pass


class ConfigError(PhdiscError):
    """Scenario configuration is invalid.  `issues` lists every bad key."""

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [issues]
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class UnknownModel(ConfigError):
    pass


class MissingKey(ConfigError):
    pass


class ConfigTypeError(ConfigError):
    pass
