"""Exception types shared across the package."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class GangSchedError(Exception):
    """Base class for all errors raised by gangsched."""


class ViolationKind(enum.Enum):
    DEADLINE_EXCEEDS_PERIOD = "DeadlineExceedsPeriod"
    WIDTH_EXCEEDS_PLATFORM = "WidthExceedsPlatform"
    NON_POSITIVE_FIELD = "NonPositiveField"
    DUPLICATE_ID = "DuplicateId"
    EXECUTION_EXCEEDS_DEADLINE = "ExecutionExceedsDeadline"
    EMPTY_TASK_SET = "EmptyTaskSet"
    RESERVED_ID = "ReservedId"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    task_id: str | None
    message: str

    def __str__(self) -> str:
        where = f"task {self.task_id!r}: " if self.task_id is not None else ""
        return f"{self.kind.value}: {where}{self.message}"


class ValidationError(GangSchedError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def kinds(self) -> set[ViolationKind]:
        return {v.kind for v in self.violations}


class ArithmeticOverflow(GangSchedError, OverflowError):
    """An integer quantity exceeded the configured arithmetic width."""


class HorizonOverflow(GangSchedError, OverflowError):
    """A simulation window exceeds the configured horizon cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(f"required horizon {required} exceeds cap {cap}")


class PolicyNotPredictable(GangSchedError):
    """The exact test was asked for a policy whose predictability is not established."""


class DocumentError(GangSchedError):
    """A task-set or trace document could not be read."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class DocumentSyntaxError(DocumentError):
    pass


class UnknownFieldError(DocumentError):
    pass
