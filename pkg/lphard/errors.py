# lphard/errors.py
from typing import Optional


class ToolkitError(Exception):
    """Base error. `status_code` is the CLI exit code, `detail` the message shown to the user."""

    status_code = 1

    def __init__(self, detail: str, status_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if status_code is not None:
            self.status_code = status_code

    def __str__(self) -> str:
        return self.detail


class DomainError(ToolkitError):
    status_code = 2


class CountingError(ToolkitError):
    status_code = 2


class LatticeError(ToolkitError):
    status_code = 2


class BudgetExceeded(ToolkitError):
    """Explicit oracle refusal: rank cap, coefficient box or time cap hit."""

    status_code = 2


class ParseError(ToolkitError):
    status_code = 2

    def __init__(self, detail: str, line: Optional[int] = None):
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line


class GadgetError(ToolkitError):
    status_code = 2


class ReductionError(ToolkitError):
    status_code = 2

    def __init__(self, detail: str, stage: Optional[str] = None):
        if stage:
            detail = f"[{stage}] {detail}"
        super().__init__(detail)
        self.stage = stage


class UsageError(ToolkitError):
    status_code = 64


class InternalError(ToolkitError):
    status_code = 1
