# app/services/errors.py
from __future__ import annotations

from typing import Optional, Sequence


class HeatwrapError(RuntimeError):
    pass


class UnsupportedSpaceError(HeatwrapError):
    pass


class DomainError(HeatwrapError, ValueError):
    pass


class BranchDomainError(DomainError):
    """A square root of a negative j-radicand was requested on an odd multiplicity."""


class PoleError(DomainError):
    def __init__(self, message: str, root: Optional[Sequence[float]] = None) -> None:
        super().__init__(message)
        self.root = tuple(root) if root is not None else None


class ResolutionError(HeatwrapError):
    pass


class ReliabilityError(HeatwrapError):
    pass


class ConfigError(HeatwrapError):
    pass


class UsageError(HeatwrapError):
    def __init__(self, message: str, field: Optional[str] = None) -> None:
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
