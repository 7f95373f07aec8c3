"""Shared exception types.

Split along the CLI exit-code boundary: ConfigError (and TopologyError, a
subtype raised while parsing topology input) map to exit code 2, ScenarioError
to exit code 3.
"""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


class TopologyError(ConfigError):
    """Malformed topology input; carries a line number when parsing."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ScenarioError(RuntimeError):
    """A well-formed scenario that cannot be realized (no host, disconnected...)."""


class InfeasibleError(ScenarioError):
    """A sizing or search step found no solution within its bounds."""
