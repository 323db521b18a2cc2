"""
Error types shared by the engine modules
"""
from typing import Optional


class SopError(Exception):
    """Base class for every toolkit error"""


class DomainError(SopError, ValueError):
    """Argument outside the mathematical domain of a function"""


class SpecError(SopError, ValueError):
    """Malformed Mellin-Barnes integrand description"""


class PoleOrderTooHigh(SpecError):
    """A left pole of order three or more was found"""


class NonConvergence(SopError, ArithmeticError):
    """A series or quadrature did not reach the requested tolerance"""


class CaseMismatch(SopError, ValueError):
    """Asymptotic coefficient requested for the wrong pole-order case"""


class RangeError(SopError, ArithmeticError):
    """A closed-form probability landed outside [0, 1]"""


class ConfigError(SopError, ValueError):
    """Invalid or incomplete parameter file"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class LowSnrWarning(UserWarning):
    """Asymptotic value fell outside [0, 1] and was clamped"""
