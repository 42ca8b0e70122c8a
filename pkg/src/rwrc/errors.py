"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An argument or parameter set violates a documented precondition."""


class CertificationError(RuntimeError):
    """A truncated infinite sum could not be certified to the requested
    tolerance within the allowed scan depth."""


class WindowCapError(RuntimeError):
    """An environment window would exceed the hard span cap."""


class ConfigError(ValueError):
    """A run configuration is malformed or incomplete."""
