"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""


class SchemaError(EngineError):
    """A frame or schema invariant was violated."""


class StoreFullError(EngineError):
    """An entry cannot be admitted under the configured budget."""


class NotFoundError(EngineError):
    """A handle, run, table or resource id does not resolve."""


class FlowParseError(EngineError):
    """A flow document is malformed.

    ``line`` / ``column`` are set for JSON syntax errors; semantic parse
    failures (duplicate ids, unknown kinds) carry them as None.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class PlanError(EngineError):
    """A flow cannot be translated into an execution plan."""


class ContextError(EngineError):
    """Execution-context lifecycle violation (duplicate run, released ctx)."""


class ComponentError(EngineError):
    """A component rejected its inputs or failed while executing."""


class SqlError(EngineError):
    """A query failed to parse, check or evaluate.

    ``issues`` holds the structured QueryIssue list when available.
    """

    def __init__(self, message: str, issues=None):
        super().__init__(message)
        self.issues = list(issues) if issues else []


class OptimizationError(EngineError):
    """The optimizer hit a non-finite objective or gradient."""


class AgentBudgetError(EngineError):
    """A state-graph run exhausted its step budget.

    Carries the partial state so callers can report a best-effort answer.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state
