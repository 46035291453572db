"""Exception types shared across the package.

Domain and I/O failures get dedicated classes so the CLI can report them
with distinct machine-parsable names; contract violations in library code
use the builtin ValueError/IndexError as usual.
"""


class KbsqaError(Exception):
    """Base class for all package-specific errors."""

    #: short machine-readable kind, used by the CLI error line
    kind = "error"


class ParseError(KbsqaError):
    """A data file (facts, questions, embeddings) is malformed."""

    kind = "parse-error"


class MissingFileError(KbsqaError):
    """A required input path does not exist."""

    kind = "missing-file"


class ConfigError(KbsqaError):
    """A configuration value violates an invariant."""

    kind = "config-error"


class TaggingError(KbsqaError):
    """A question could not be split into mention and pattern."""

    kind = "tagging-error"


class OptimizerError(KbsqaError):
    """The optimizer received non-finite gradients; the step was skipped."""

    kind = "optimizer-error"


class TrainingError(KbsqaError):
    """Training aborted (for example on a non-finite loss)."""

    kind = "training-error"


class CheckpointError(KbsqaError):
    """A checkpoint file is corrupt or does not match the declared layout."""

    kind = "checkpoint-error"


class NotFittedError(KbsqaError, AttributeError):
    """An estimator method was called before fit()."""

    kind = "not-fitted"
