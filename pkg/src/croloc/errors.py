"""Exception types shared across the toolkit."""


class CrolocError(Exception):
    """Base class for all croloc errors."""


class CorpusError(CrolocError):
    """Source tree or bug report input is invalid."""


class ReportFormatError(CorpusError):
    """A bug report line is malformed or violates an invariant."""


class SpanError(CrolocError):
    """A span/segment replacement target is invalid (overlap, out of range)."""


class TranslationError(CrolocError):
    """A translation backend failed."""


class ProtocolError(TranslationError):
    """The translation service answered outside the wire contract."""


class IndexFormatError(CrolocError):
    """A persisted index file cannot be read."""


class EvalError(CrolocError):
    """Run/qrels inputs are inconsistent or malformed."""


class ConfigError(CrolocError):
    """Project configuration is missing keys or references missing paths."""
