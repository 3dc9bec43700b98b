"""Exception types shared across the package."""


class MeshgradeError(Exception):
    """Base class for all errors raised by this package."""


class SceneValidationError(MeshgradeError, ValueError):
    """A domain object was constructed from invalid field values."""


class ConfigurationError(MeshgradeError, ValueError):
    """A rubric, weight table or tolerance table is unusable as configured."""


class TemplateError(MeshgradeError, ValueError):
    """A feedback template set failed to load."""
