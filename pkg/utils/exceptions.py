class AirGnnError(Exception):
    """Base exception for the simulator, trainer and evaluation harness"""

    pass


class ConfigurationError(AirGnnError):
    """Exception raised for inconsistent dimensions or invalid parameters"""

    pass


class ConfigParseError(ConfigurationError):
    """Exception raised for a malformed config file or an unknown key"""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UsageError(AirGnnError):
    """Exception raised when an API or CLI command is called the wrong way"""

    pass


class DomainError(AirGnnError):
    """Exception raised for arguments outside the mathematical domain"""

    pass


class EstimationError(AirGnnError):
    """Exception raised when an over-the-air estimate is undefined"""

    pass


class DegenerateChannelError(AirGnnError):
    """Exception raised when a solver meets a channel with nothing to divide by"""

    pass


class NonFiniteError(AirGnnError):
    """Exception raised when a forward operation produces NaN or Inf"""

    pass


class DataError(AirGnnError):
    """Exception raised for unusable datasets"""

    pass


class CheckpointError(DataError):
    """Exception raised for unreadable or corrupt checkpoint files"""

    pass


class MissingCheckpointError(CheckpointError):
    """Exception raised when an experiment needs a model that was never trained"""

    def __init__(self, kind: str, path: str, hint: str):
        self.kind = kind
        self.path = path
        self.hint = hint
        super().__init__(f"no checkpoint for '{kind}' at {path}; {hint}")


class TrainingDivergedError(AirGnnError):
    """Exception raised when the training loss stops being finite"""

    def __init__(self, message: str, iteration: int, batch_seed: int):
        self.iteration = iteration
        self.batch_seed = batch_seed
        super().__init__(f"{message} (iteration={iteration}, batch_seed={batch_seed})")
