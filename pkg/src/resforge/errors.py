"""Exception hierarchy shared by every resforge module."""


class ResforgeError(Exception):
    """Base class for domain errors (mapped to exit code 1 by the CLI)."""


class MaterialError(ResforgeError, KeyError):
    pass


class GeometryError(ResforgeError, ValueError):
    pass


class CellBudgetError(GeometryError):
    pass


class InstabilityError(ResforgeError, FloatingPointError):
    """Raised when FDTD fields blow up (CFL violation or bad coefficients)."""


class MonitorError(ResforgeError, ValueError):
    pass


class NoGuidedModeError(ResforgeError):
    pass


class CutoffError(ResforgeError, ValueError):
    """Requested slab mode order is below cutoff."""


class ConvergenceError(ResforgeError, RuntimeError):
    pass


class ModeSwapError(ResforgeError):
    """Mode identity changed between neighbouring wavelengths."""


class FitError(ResforgeError, ValueError):
    pass


class NoResonanceError(FitError):
    pass


class ConfigError(ResforgeError, ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class SpectrumError(ResforgeError, ValueError):
    """Malformed spectrum samples."""
