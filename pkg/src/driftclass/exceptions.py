"""Exception types raised across the package.

All of them derive from ``ValueError`` so callers that only care about
"bad input" can catch that.
"""


class DriftClassError(ValueError):
    """Base class for package errors."""


class DomainError(DriftClassError):
    """A function was evaluated outside the set on which it is defined."""


class DegenerateClassError(DriftClassError):
    """A class has fewer than two paths, so its drift cannot be estimated."""


class DegenerateModelError(DriftClassError):
    """The two class drifts coincide, so the model carries no signal."""


class InsufficientDataError(DriftClassError):
    """Not enough usable points for a fit."""


class ConfigError(DriftClassError):
    """Invalid experiment configuration.

    Parameters
    ----------
    message : str
        Human-readable description.
    key : str, optional
        Offending configuration key.
    line : int, optional
        1-based line number in the config document.
    """

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
