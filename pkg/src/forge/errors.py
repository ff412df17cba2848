"""Exception types shared across the engine."""


class ForgeError(Exception):
    """Base class for engine errors."""


class VocabTooSmall(ForgeError):
    """Requested vocabulary cannot hold the byte alphabet plus specials."""


class UnknownId(ForgeError):
    """A token id is outside the vocabulary."""


class FormatError(ForgeError):
    """A serialized artifact (vocab, profile, plan, JSONL) is malformed."""


class GrammarUnavailable(ForgeError):
    """No parser is registered for the requested language."""


class ParseFailure(ForgeError):
    """Source text could not be parsed at all."""


class EmptyReference(ForgeError):
    """A metric was called without any reference text."""


class LabelerUnavailable(ForgeError):
    """A document needs a quality label but no labeler or cache covers it."""


class MalformedVerdict(ForgeError):
    """A quality-labeler response could not be normalized to yes/no."""


class TranslatorFailure(ForgeError):
    """An external translator process failed or broke protocol."""


class EmptyHistory(ForgeError):
    """Checkpoint selection was given no (epoch, score) history."""


class CompilerMissing(ForgeError):
    """The configured compiler binary is not on PATH."""


class CompileTimeout(ForgeError):
    """The compiler exceeded the adapter's time budget."""


class NotAnError(ForgeError):
    """classify_error was handed a successful compile result."""


class Unrepairable(ForgeError):
    """No rule-based fix exists for this error category."""


class UsageError(ForgeError):
    """Bad command-line arguments or options."""


class DataError(ForgeError):
    """Input data failed validation."""
