"""Exception hierarchy for spotex.

Everything raised on bad input derives from SpotexError, which the CLI
turns into exit code 2.
"""

from typing import FrozenSet, Optional


class SpotexError(ValueError):
    """Root of all spotex input and domain errors."""


# ─── Fingerprints and metrics ─────────────────────────────────────────────────

class FingerprintError(SpotexError):
    pass


class MetricError(SpotexError):
    pass


# ─── Rules ────────────────────────────────────────────────────────────────────

class RuleError(SpotexError):
    """A rule source problem tied to a position in the text."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self._format())

    def _format(self) -> str:
        if self.line:
            return f"line {self.line}, column {self.column}: {self.message}"
        return self.message


class RuleSyntaxError(RuleError):
    def __init__(self, message: str, line: int, column: int,
                 expected: FrozenSet[str] = frozenset()):
        self.expected = frozenset(expected)
        if self.expected:
            message = f"{message}; expected one of {sorted(self.expected)}"
        super().__init__(message, line, column)


class UnknownPredicateError(RuleError):
    def __init__(self, name: str, line: int = 0, column: int = 0):
        self.name = name
        super().__init__(f"unknown predicate {name!r}", line, column)


class ArityError(RuleError):
    def __init__(self, name: str, expected: int, got: int,
                 line: int = 0, column: int = 0):
        self.name = name
        self.expected = expected
        self.got = got
        super().__init__(f"{name} takes {expected} argument(s), got {got}", line, column)


class RuleArgumentError(RuleError):
    pass


class InvalidIntervalError(RuleError):
    pass


class ProximityLogRequiredError(RuleError):
    def __init__(self):
        super().__init__("proximity log required")


class RuleEvaluationError(SpotexError):
    """An evaluation failure annotated with the rule that raised it."""

    def __init__(self, rule_id: str, cause: Exception):
        self.rule_id = rule_id
        self.cause = cause
        super().__init__(f"rule {rule_id}: {cause}")


# ─── Proximity log, groups, check-ins ─────────────────────────────────────────

class LogError(SpotexError):
    pass


class OutOfOrderRecordError(LogError):
    pass


class EmptyWindowError(LogError):
    pass


class LogFormatError(LogError):
    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class GroupError(SpotexError):
    pass


class NoAnchorMeasurementError(GroupError):
    pass


class CheckInError(SpotexError):
    pass


class AlreadyExpiredError(CheckInError):
    pass


# ─── Simulator ────────────────────────────────────────────────────────────────

class ScenarioError(SpotexError):
    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
