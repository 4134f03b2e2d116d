"""Exception types shared across the annotation engine."""


class AnnotatorError(Exception):
    """Base class for every error raised by this package."""


class InputIOError(AnnotatorError):
    """A required input file is missing or unreadable."""


class FormatError(AnnotatorError):
    """An input file violates its documented format."""


class MismatchError(AnnotatorError):
    """Feature and label image ids disagree for a strict bundle."""

    def __init__(self, message: str, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class ArgumentError(AnnotatorError):
    """A parameter lies outside its documented range."""


class ConfigError(ArgumentError):
    """A run configuration file is malformed or contains unknown keys."""


class DegenerateError(ArgumentError):
    """Parameters make the requested quantity undefined."""


class EmptyVocabularyError(AnnotatorError):
    """Vocabulary filtering removed every word."""


class ShapeError(AnnotatorError):
    """Array dimensions do not conform."""


class GroupError(AnnotatorError):
    """Group ranges do not partition the design matrix columns."""


class KeyMismatchError(AnnotatorError):
    """Prediction and truth tables are keyed by different image ids."""


class WordNotCandidateError(AnnotatorError):
    """A word was scored without being in the candidate vocabulary."""
