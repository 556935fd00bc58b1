"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A solve or recursion hit a numerically unusable quantity.

    Raised for singular (or effectively singular) correlation matrices in
    the batch solvers and for non-finite or zero gain denominators in the
    streaming recursions. Step functions raise this before touching any
    state, so a caught error leaves the filter state as it was.
    """


class TrialError(RuntimeError):
    """A Monte-Carlo trial aborted; the message carries the symbol index."""


class ConfigError(ValueError):
    """An experiment definition failed to parse or validate.

    Messages name the offending key and, when the error comes from a config
    file, the one-based line number.
    """
