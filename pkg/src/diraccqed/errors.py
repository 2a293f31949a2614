"""Exception hierarchy shared by all modules."""


class DiracCQEDError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(DiracCQEDError, ValueError):
    pass


class ModelError(DiracCQEDError, ValueError):
    """Invalid tight-binding or coupling model."""


class OverlapFileError(ModelError):
    pass


class ConeFitError(DiracCQEDError, RuntimeError):
    pass


class StateError(DiracCQEDError, ValueError):
    pass


class IntegrationError(DiracCQEDError, RuntimeError):
    """The ODE integrator failed; ``diagnostics`` holds solver state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InversionAccuracyError(DiracCQEDError, RuntimeError):
    pass


class InsufficientDataError(DiracCQEDError, ValueError):
    pass


class ConfigError(DiracCQEDError, ValueError):
    pass
