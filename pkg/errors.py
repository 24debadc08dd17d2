"""Exception hierarchy for the Loeb arena.

Every error carries an ``exit_code`` so the command line can map failures to
process statuses without inspecting messages:

* 2 - the input could not be read (parse, configuration, unknown agent name)
* 3 - the input was read but is semantically invalid
* 4 - an internal invariant was violated
"""

from __future__ import annotations


class LoebArenaError(Exception):
    """Base class for every error raised by the library."""

    exit_code = 3


class ParseError(LoebArenaError):
    """Raised when formula, agent, roster or proof text does not parse.

    Attributes:
        offset: Byte offset of the offending character in the source text.
        expected: Sorted display names of the tokens the parser would accept.
    """

    exit_code = 2

    def __init__(self, message: str, offset: int = 0, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownAgent(LoebArenaError):
    exit_code = 2

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown agent {name!r}")


class ConfigError(LoebArenaError):
    exit_code = 2


class NotFullyModalized(LoebArenaError):
    """A variable occurs outside every Box in a defining formula or condition."""

    def __init__(self, variable: str, path: tuple[str, ...], owner: str | None = None):
        self.variable = variable
        self.path = path
        self.owner = owner
        where = "/".join(path) if path else "<root>"
        message = f"variable {variable!r} occurs outside any box at {where}"
        if owner is not None:
            message += f" in the definition of {owner!r}"
        super().__init__(message)


class VariableMismatch(LoebArenaError):
    pass


class ActionSetMismatch(LoebArenaError):
    pass


class AgentDefinitionError(LoebArenaError):
    pass


class UnknownAction(LoebArenaError):
    pass


class DomainError(LoebArenaError):
    pass


class NonpositiveFitness(LoebArenaError):
    pass


class InternalEvaluationError(LoebArenaError):
    exit_code = 4
