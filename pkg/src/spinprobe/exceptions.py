class SpinProbeError(Exception):
    """Base class for errors raised by spinprobe."""


class RangeError(SpinProbeError, ValueError):
    """Query outside the tabulated domain; no extrapolation is done."""


class TableFormatError(SpinProbeError, ValueError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MissingChannelError(SpinProbeError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing channel"


class QuadratureError(SpinProbeError, ArithmeticError):
    pass


class NumericalError(SpinProbeError, ArithmeticError):
    pass


class SteadyStateError(NumericalError):
    pass


class EstimationError(SpinProbeError, RuntimeError):
    pass


class ConfigError(SpinProbeError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
