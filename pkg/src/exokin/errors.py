"""Exception types shared across the package."""

from __future__ import annotations


class InvalidArgument(ValueError):
    """An argument violates an operation's precondition."""


class ArmConfigError(ValueError):
    """Arm configuration failed validation.

    ``violations`` holds one human-readable message per problem found, so a
    caller can report everything at once instead of fixing errors one by one.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid arm config:\n  " + "\n  ".join(self.violations))


class ROMError(ValueError):
    """A pose value lies outside the arm's range of motion."""

    def __init__(self, dof: str, value: float, lo: float, hi: float):
        self.dof = dof
        super().__init__(f"{dof}={value:.6g} rad outside ROM [{lo:.6g}, {hi:.6g}]")


class ConstructionError(ValueError):
    """A design could not be realized as a kinematic chain."""

    def __init__(self, fragment: str, message: str):
        self.fragment = fragment
        super().__init__(f"{fragment}: {message}")


class ConfigError(ValueError):
    """Run configuration is malformed (syntax) or violates the schema."""

    def __init__(self, message: str, *, path: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.path = path
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        elif path:
            where = f" at '{path}'"
        super().__init__(message + where)
