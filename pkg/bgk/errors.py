"""Exceptions raised by the kinetic solver library."""
from typing import Optional


class BgkError(Exception):
    """Base error carrying an exit code and a description, like an HTTP exception."""

    code = 3
    description = "Solver error."

    def __init__(self, description: Optional[str] = None, errors: Optional[dict] = None):
        if description is not None:
            self.description = description
        self.errors = errors or {}
        super().__init__(self.description)

    @property
    def name(self) -> str:
        return type(self).__name__


class ConfigError(BgkError):
    code = 2
    description = "Invalid configuration."


class CheckFailure(BgkError):
    code = 1
    description = "Verification check failed."


class SolverError(BgkError):
    code = 3


class SupportOverflow(SolverError):
    description = "Solution support left the computational grid."


class StepOverflow(SolverError):
    description = "Characteristic left the velocity truncation band."


class CflViolation(SolverError):
    description = "Time step violates the CFL condition."


class NegativeDefect(SolverError):
    description = "Defect measure is negative beyond tolerance."
