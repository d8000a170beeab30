"""Exception types shared across the package."""


class KgThreadsError(Exception):
    """Base class for package errors."""


class GraphFormatError(KgThreadsError):
    """Malformed graph file or inconsistent entity/triple records."""


class UnknownEntityError(KgThreadsError):
    """An operation referenced an entity id not present in the graph."""


class DimensionMismatchError(KgThreadsError):
    """Vector operands of incompatible dimensions."""


class ProviderError(KgThreadsError):
    """An embedding or completion provider failed or returned bad data."""


class ChainError(KgThreadsError):
    """A triple sequence violates the shared-endpoint chaining rule."""


class ConfigError(KgThreadsError):
    """Invalid run configuration (bad weights, missing files, unknown keys)."""


class EmptySearchError(KgThreadsError):
    """The search could not expand a single action from any seed."""


class StageError(KgThreadsError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
