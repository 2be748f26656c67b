"""
Exception hierarchy shared by every difftalk package
"""
from typing import Iterable, Optional


class PipelineError(Exception):
    """Base class for all difftalk errors"""


class ShapeError(PipelineError, ValueError):
    """Tensor or array dimensions do not agree"""


class ContractViolation(PipelineError, AssertionError):
    """A caller broke an operation's pre-condition"""


class ValidationError(PipelineError, ValueError):
    """Input data is outside its declared domain"""


class ParseError(ValidationError):
    """A text artifact could not be parsed"""

    def __init__(self, path: str, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class ConfigError(ValidationError):
    """Configuration value is missing or invalid"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class StageMissingError(PipelineError):
    """A checkpoint produced by an earlier pipeline stage is not available"""

    def __init__(self, stage: str, path: str, command: str):
        self.stage = stage
        self.path = path
        super().__init__(
            f"stage '{stage}' has not been run: {path} not found (run `difftalk {command}` first)"
        )


class FrozenParameterError(PipelineError):
    """Parameters marked as frozen changed during training"""


class ConvergenceError(PipelineError):
    """Training diverged or missed its required target"""

    def __init__(self, stage: str, final_loss: float, message: Optional[str] = None):
        self.stage = stage
        self.final_loss = final_loss
        detail = message or "did not converge"
        super().__init__(f"{stage}: {detail} (final loss {final_loss:.6g})")


class MissingFramesError(ValidationError):
    """Run and ground-truth frame sets do not match"""

    def __init__(self, missing: Iterable[int], where: str):
        self.missing = sorted(missing)
        super().__init__(f"frames missing from {where}: {self.missing}")
