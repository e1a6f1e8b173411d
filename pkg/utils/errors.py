"""
Exception hierarchy shared by the services and the CLI
"""
from typing import Any, Dict, Optional


class FreezeError(Exception):
    """Base class for all toolkit errors"""

    exit_code: int = 1

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})


class DomainError(FreezeError, ValueError):
    """Parameter outside its admissible domain, or a configuration outside its chamber"""

    exit_code = 2


class NumericFailure(FreezeError, ArithmeticError):
    """An iteration failed to converge or an internal consistency check failed"""

    exit_code = 3


class ToleranceExceeded(NumericFailure):
    """A verified quantity missed its tolerance"""

    def __init__(self, quantity: str, value: float, tolerance: float):
        super().__init__(
            f"{quantity} = {value:.3e} exceeds tolerance {tolerance:.1e}",
            diagnostics={"quantity": quantity, "value": value, "tolerance": tolerance},
        )
        self.quantity = quantity
        self.value = value
        self.tolerance = tolerance
