from __future__ import annotations

from typing import Any


class EvaluationError(ValueError):
    """A callable produced a non-finite value at a mesh point."""

    def __init__(self, message: str, index: Any = None):
        super().__init__(message)
        self.index = index


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, index: Any = None):
        super().__init__(message)
        self.index = index


class UnsupportedRegimeError(ValueError):
    pass


class ProblemSizeError(ValueError):
    pass


class NestednessError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid experiment configuration, `field` names the offending key."""

    def __init__(self, message: str, field: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class EstimationError(RuntimeError):
    def __init__(
        self,
        message: str,
        level: int | None = None,
        sample: int | None = None,
        replicate: int | None = None,
    ):
        super().__init__(message)
        self.level = level
        self.sample = sample
        self.replicate = replicate
