class FragscanError(Exception):
    """Base class for all errors raised by fragscan."""


class InvalidArgument(FragscanError, ValueError):
    pass


class EmptyInputError(InvalidArgument):
    pass


class InsufficientSamplesError(InvalidArgument):
    pass


class DataError(FragscanError):
    """Input file content is malformed (bad labels, missing tiles, ...)."""
