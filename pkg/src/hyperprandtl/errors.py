"""Exception hierarchy."""


class HyperPrandtlError(Exception):
    pass


class DomainError(HyperPrandtlError, ValueError):
    """Argument outside the admissible range (time, derivative order, ...)."""


class BlowupError(HyperPrandtlError, FloatingPointError):
    """Non-finite values or exhausted CFL retries during time stepping."""

    def __init__(self, message, t=None, step=None):
        super().__init__(message)
        self.t = t
        self.step = step


class IncompatibleDataError(HyperPrandtlError, ValueError):
    """Initial data violating the wall boundary conditions."""

    def __init__(self, message, residual=0.0):
        super().__init__(message)
        self.residual = residual


class FieldFormatError(HyperPrandtlError, ValueError):
    pass


class ConfigError(HyperPrandtlError, ValueError):
    """Aggregated configuration problems; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))
