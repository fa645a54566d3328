"""Exception hierarchy shared across the toolkit."""


class ShadowsigError(Exception):
    """Base class for all library errors."""


class ConfigurationError(ShadowsigError):
    """Invalid generator / protocol configuration (bad n, degrees, caps)."""


class ResourceError(ShadowsigError):
    """Request exceeds a dense-simulation or spectral size cap."""


class ParseError(ShadowsigError):
    """Malformed structured-text input; carries line/field diagnostics."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StructuralError(ShadowsigError):
    """Circuit/template or header/record mismatch."""


class ZeroBranchError(ShadowsigError):
    """A conditional target state has zero probability mass."""


class DataError(ShadowsigError):
    """Too many unusable records in a shadow set."""


class NoGapError(ShadowsigError):
    """Honest infidelity exceeds the assumed learning floor; no certification gap."""


class InfiniteTauError(ShadowsigError):
    """Degenerate top eigenvalue: the induced chain is disconnected."""


class ParameterError(ShadowsigError):
    """Security-parameter combination violates a protocol precondition."""


class InsufficientAcceptanceError(ShadowsigError):
    """No post-selected shots survived error detection."""
