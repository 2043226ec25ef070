"""Exception hierarchy shared by every disti module."""


class DistiError(Exception):
    """Base class for all errors raised by disti."""


class ParseError(DistiError):
    """Syntax error in a program or assertion text, with a source position."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class EvalFault(DistiError):
    """An expression could not be evaluated, e.g. ``pow2`` of a negative number."""

    def __init__(self, message, state=None):
        self.message = message
        self.state = state
        if state is not None:
            message = f"{message} at state {state}"
        super().__init__(message)

    def at(self, state):
        """Return a copy of this fault with the offending state attached."""
        if self.state is not None:
            return self
        return EvalFault(self.message, state)


class MassError(DistiError):
    """A sub-distribution would carry negative weight or total mass above one."""


class AssertionSyntaxError(ParseError):
    """Malformed distribution assertion (syntax error or unbound parameter)."""


class NotALoopError(DistiError):
    """An operation that needs a top-level ``while`` loop received something else."""


class AstNotAssumed(DistiError):
    """Total-correctness checking was requested without assuming almost-sure termination."""


class BitsExhausted(DistiError):
    """A replay bit source ran out of bits."""
