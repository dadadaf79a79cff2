"""Exception hierarchy shared by every holosim module."""


class HolosimError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(HolosimError, ValueError):
    """An argument is outside the domain of the operation."""


class NumericalBlowupError(HolosimError, ArithmeticError):
    """The integrated state became non-finite."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StepSizeError(HolosimError):
    """Norm or trace drift exceeded tolerance; a smaller step is needed."""


class BracketError(HolosimError, ValueError):
    """A root bracket does not contain a sign change."""


class InvalidDeviceError(HolosimError, ValueError):
    """Device parameters violate a hardware invariant."""


class InfeasibleResonanceError(HolosimError, ValueError):
    """Resonance conditions require a non-positive tone frequency."""


class DesignInfeasibleError(HolosimError, ValueError):
    """A gate design has no admissible solution."""


class UnsupportedConfigurationError(HolosimError, ValueError):
    """The request is outside what the model supports."""


class ConfigError(HolosimError, ValueError):
    """Invalid scenario configuration. ``problems`` lists (path, message)."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.problems]
        super().__init__("; ".join(lines))
