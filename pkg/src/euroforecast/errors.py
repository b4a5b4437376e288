"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI lives in ``cli.py``; everything here is a
plain exception with enough context to produce a located diagnostic.
"""

from __future__ import annotations


class ParameterError(ValueError):
    """A value is outside its mathematical domain (e.g. mu <= 0)."""


class DataError(Exception):
    """Malformed or inconsistent input data.

    Carries an optional source location so ingestion failures can be
    reported as ``file:line: message``.
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class FileAccessError(DataError):
    """A file could not be read, written, or hashed (I/O, not content)."""


class ConfigError(Exception):
    """Invalid configuration (unknown codes, missing tables, bad schema)."""


class FitError(Exception):
    """Maximum-likelihood fit failed to converge.

    ``best`` holds the best coefficient vector found so far and
    ``diagnostics`` whatever the optimizer reported; both may be None.
    """

    def __init__(self, message: str, *, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics


class InsufficientDataError(FitError):
    """Too few observations to attempt a fit."""
