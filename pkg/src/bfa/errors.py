"""Shared exception hierarchy.

Everything the toolkit raises on purpose derives from BfaError, so callers
can catch one type. ConfigError marks usage and configuration problems
(CLI exit 2); TargetError marks failures of the system under test (exit 3).
"""


class BfaError(Exception):
    """Base for all errors this package raises deliberately."""


class ConfigError(BfaError):
    """Bad configuration or usage: malformed env values, config files."""


class TargetError(BfaError):
    """The system under test failed: bad exit, unreachable, broken output."""

    def __init__(self, message: str, exit_code=None, stderr=None):
        super().__init__(message)
        self.exit_code = exit_code
        self.stderr = stderr
