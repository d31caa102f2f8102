class InputError(ValueError):
    """Rejected input: bad dimensions, mismatched fields, out-of-range parameters."""


class ReportError(IOError):
    """A persisted report could not be written, read or validated."""
