"""Exception types shared across the package."""


class OissError(Exception):
    pass


class DomainError(OissError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class InvalidYoungError(OissError, ValueError):
    pass


class UnsupportedDegreeError(OissError, ValueError):
    """Result would leave the piecewise cubic class."""


class DivergentIntegralError(OissError, ValueError):
    pass


class ModelStateMismatch(OissError, TypeError):
    pass


class InputDomainError(OissError, ValueError):
    """Input is not defined on the whole requested time interval."""


class RejectedCertificate(OissError, ValueError):
    """A comparison function failed its class check."""


class ConstructionError(OissError, RuntimeError):
    pass
