"""Exception hierarchy.

Every error raised by the pipeline derives from :class:`PipelineError`, so
callers (the CLI in particular) can catch one type and still report the
specific kind via ``type(err).__name__``.
"""

import copy


class PipelineError(ValueError):
    """Base class for all pipeline errors."""

    def with_context(self, context):
        """Return a copy of this error whose message is prefixed by ``context``."""
        err = copy.copy(self)
        err.args = (f"{context}: {self}",)
        return err


class LineError(PipelineError):
    """An input-file error tied to a 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


# ingest
class MissingColumnError(PipelineError):
    pass


class NonMonotonicTimeError(LineError):
    pass


class NonUniformSamplingError(LineError):
    pass


class NonFiniteSampleError(LineError):
    pass


class MalformedRowError(LineError):
    pass


class UnknownLabelError(LineError):
    pass


class OnsetOutOfRangeError(LineError):
    pass


class MixedLayoutError(PipelineError):
    pass


class InvalidRecordingError(PipelineError):
    pass


# dsp
class CutoffAboveNyquistError(PipelineError):
    pass


class OddOrderError(PipelineError):
    pass


class InvalidBandError(PipelineError):
    pass


class SignalTooShortError(PipelineError):
    pass


class UnsupportedRateError(PipelineError):
    pass


# epoch / features
class WindowExceedsRecordingError(PipelineError):
    pass


class InsufficientPreOnsetDataError(PipelineError):
    pass


class MissingModalityError(PipelineError):
    pass


# models
class EmptyMatrixError(PipelineError):
    pass


class ClassAbsentError(PipelineError):
    pass


class SingleClassError(PipelineError):
    pass


class NonPositiveCError(PipelineError):
    pass


class DegenerateLabelsError(PipelineError):
    pass


class ModelFormatError(PipelineError):
    pass


# fusion / evaluation
class EmptyEnsembleError(PipelineError):
    pass


class ClassTooSmallError(PipelineError):
    pass


class ClassSmallerThanKError(PipelineError):
    pass


class EmptyGridError(PipelineError):
    pass


class EmptyVectorError(PipelineError):
    pass


# synth
class InvalidDurationError(PipelineError):
    pass


class RateTooLowError(PipelineError):
    pass


# cli
class ConfigError(PipelineError):
    pass


class IoError(PipelineError):
    """A file or directory could not be read or written."""
