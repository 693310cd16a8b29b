"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 1 for usage and
configuration problems, 2 for numerical failures, 3 for failed
verifications.
"""


class PACurvesError(Exception):
    exit_code = 2


class UsageError(PACurvesError, ValueError):
    exit_code = 1


class InputError(UsageError):
    """Arguments violate an operation's preconditions."""


class UnsupportedModelError(UsageError):
    pass


class FixtureError(UsageError):
    pass


class DomainError(PACurvesError, ValueError):
    """A point or sample falls outside where the computation is defined."""


class RegularityError(PACurvesError):
    pass


class DegenerateCurveError(PACurvesError):
    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class DegenerateFitError(PACurvesError):
    pass


class IntegrationBlowupError(PACurvesError):
    def __init__(self, message, s_last=None):
        super().__init__(message)
        self.s_last = s_last


class IntegrationError(PACurvesError):
    pass


class ParallelCaseError(PACurvesError):
    """The potential function vanishes, so the field is parallel along the curve."""


class NearOrthogonalError(PACurvesError):
    """cos(theta) is too small to divide by; use the orthogonal-angle pipeline."""


class TorsionVanishingError(PACurvesError):
    pass


class InfeasibleProfileError(PACurvesError):
    def __init__(self, message, intervals=()):
        super().__init__(message)
        self.intervals = list(intervals)


class VerificationFailure(PACurvesError):
    exit_code = 3
