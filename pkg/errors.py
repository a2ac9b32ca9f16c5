"""
Error Types
Shared exception hierarchy; the CLI maps each class to an exit code
"""
from typing import Dict, Any, Optional


class SurvivalToolError(Exception):
    """Base exception for all library errors"""

    exit_code: int = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable error object"""
        return {
            "error": self.__class__.__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "context": self.context,
        }


class ConfigError(SurvivalToolError):
    """Invalid configuration, flags or config file"""

    exit_code = 2


class DataError(SurvivalToolError):
    """Input data cannot be used"""

    exit_code = 3


class ParseError(DataError):
    """Malformed CSV row"""

    def __init__(self, message: str, line: Optional[int] = None, context: Optional[Dict[str, Any]] = None):
        context = dict(context or {})
        if line is not None:
            context["line"] = line
        super().__init__(message, context)
        self.line = line


class SchemaError(DataError):
    """Column values outside their declared domain"""


class NumericalError(SurvivalToolError):
    """A numerical routine failed"""

    exit_code = 4


class SingularDesignError(NumericalError):
    """Normal equations stayed singular after jitter"""


class CholeskyError(NumericalError):
    """Correlation matrix not positive definite after jitter escalation"""
