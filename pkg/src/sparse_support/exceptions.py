class ConfigError(ValueError):
    """Raised for scenario / training / plan parameters that violate their invariants."""


class DegenerateMatrixError(ValueError):
    """Raised when a measurement matrix has a zero column and cannot be power-normalized."""


class TrainingError(RuntimeError):
    """Raised when the loss becomes non-finite during training.

    ``log`` holds the per-epoch records collected up to the last finite epoch.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = list(log or [])


class FormatError(ValueError):
    """Raised when a checkpoint or dataset file cannot be parsed.

    ``field`` names the header field or payload section that failed.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
