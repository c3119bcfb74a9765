"""Shared exception types."""


class ArchloopError(Exception):
    """Base class for all harness errors."""


class OversizeInputError(ArchloopError):
    """Candidate source exceeds the configured size limit."""


class IncompatibleSignatureError(ArchloopError):
    """Signatures differ in length or seed lineage."""


class DuplicateIdError(ArchloopError):
    """An id was inserted twice into an index, archive, or corpus."""


class ConversionError(ArchloopError):
    """A corpus record could not be converted to chat pairs."""


class UndefinedIntervalError(ArchloopError):
    """Confidence interval requested for an empty sample."""


class InsufficientDataError(ArchloopError):
    """Fewer samples than the statistic requires."""


class EmptyCycleError(ArchloopError):
    """Cycle summary requested over an empty record list."""


class EvaluatorUnavailableError(ArchloopError):
    """The evaluation backend could not be reached."""


class GenerationError(ArchloopError):
    """An external generator invocation failed for one slot."""


class ConfigError(ArchloopError):
    """Invalid run configuration."""
