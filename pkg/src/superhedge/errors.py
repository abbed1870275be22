class InputError(ValueError):
    """Malformed or inconsistent input to a library operation."""


class DegenerateDualError(InputError):
    """A dual point with zero total mass cannot be normalised into a measure."""


class DocumentParseError(InputError):
    """The market document is not syntactically valid."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class DocumentValueError(DocumentParseError):
    """A field holds a value that cannot be converted (bad rational, P <= 0, ...)."""


class MarketValidationError(InputError):
    """The document parses but the market it describes violates a model invariant."""

    def __init__(self, message: str, failures: list[str] | None = None):
        self.failures = failures or []
        super().__init__(message)
