"""Exception hierarchy shared by the estimators and the CLI."""


class EntropyError(Exception):
    """Base class for all errors raised by pymentropy."""


class DomainError(EntropyError, ValueError):
    """An argument lies outside the domain of a function."""


class EmptyDataError(EntropyError, ValueError):
    """An estimator that needs at least one sample got none."""


class InconsistentAlphabetError(EntropyError, ValueError):
    """The alphabet size is smaller than the number of observed symbols."""


class NoCoincidencesError(EntropyError):
    """Too few repeated observations for a finite estimate.

    The PYM posterior mean is finite only when the data contain at least
    two coincidences, i.e. ``N - K >= 2``.
    """

    def __init__(self, coincidences, required=2):
        self.coincidences = coincidences
        self.required = required
        super().__init__(
            f"need at least {required} coincidences (N - K >= {required}) for a "
            f"finite estimate, got N - K = {coincidences}"
        )


class NumericalError(EntropyError, ArithmeticError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class TailTruncationError(NumericalError):
    """Stick-breaking hit its stick cap before the tail became negligible."""


class ConfigError(EntropyError, ValueError):
    """Invalid configuration or distribution specification."""


class InputFormatError(EntropyError, ValueError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
