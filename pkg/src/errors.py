"""
Exception hierarchy
Every failure the pipeline raises on purpose derives from ImaginationError
"""

from typing import Optional


class ImaginationError(Exception):
    """Base class for all pipeline errors"""

    exit_code = 1


class ConfigError(ImaginationError, ValueError):
    """Invalid configuration value, infeasible world or unusable path"""

    exit_code = 2


class DependencyError(ImaginationError):
    """A required checkpoint or dataset is missing"""

    exit_code = 3

    def __init__(self, message: str, missing: Optional[str] = None):
        super().__init__(message)
        self.missing = missing


class NumericError(ImaginationError, ArithmeticError):
    """Non-finite values where finite ones are required"""

    exit_code = 4

    def __init__(self, message: str, tensor: Optional[str] = None):
        super().__init__(message)
        self.tensor = tensor


class TrainingError(ImaginationError):
    """Training diverged"""

    exit_code = 4

    def __init__(self, message: str, epoch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch


class ShapeError(ImaginationError, ValueError):
    """Array dimensions do not line up"""

    exit_code = 4


class InvariantError(ImaginationError, ValueError):
    """A domain invariant does not hold (e.g. no negative object in a scene)"""


class EncodingError(ImaginationError, ValueError):
    """A question argument outside its argument space"""


class DialogueValidationError(ImaginationError, ValueError):
    """Empty dialogue, empty archive or similar malformed input"""

    exit_code = 2


class SceneParseError(ImaginationError, ValueError):
    """Malformed line in a JSON-Lines file"""

    exit_code = 2

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.line_number = line_number
