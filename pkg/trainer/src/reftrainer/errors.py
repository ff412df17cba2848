"""Error types shared across the trainer."""


class SchemaError(ValueError):
    """An input file or record does not match its documented shape.

    Raised when a vocabulary file, an example stream, or a protocol
    request is malformed.  The message names the offending location
    (path and line where available) so the producing side can be fixed.
    """
