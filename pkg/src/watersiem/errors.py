"""Exception types shared across the package."""


class WatersiemError(Exception):
    """Base class for every error raised by this package."""


class SimulationFault(WatersiemError):
    """Plant state became non-finite; the stepper refuses to continue."""


class ProtocolError(WatersiemError):
    """Malformed or unsupported Modbus frame."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class ModbusExceptionResponse(WatersiemError):
    """The server answered with a Modbus exception code."""

    def __init__(self, function: int, code: int):
        self.function = function
        self.code = code
        super().__init__(f"modbus exception 0x{code:02X} for function 0x{function:02X}")


class RegisterValidationError(WatersiemError):
    """A register file violates the documented bit layout."""


class LogStructureError(WatersiemError):
    """A CSV log breaks the 10-rows-per-instance structure."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"{message} (line {line_number})"
        super().__init__(message)


class PipelineError(WatersiemError):
    """Dataset preprocessing cannot proceed with the given inputs."""


class TrainingError(WatersiemError):
    """Classifier training received unusable data."""


class EvaluationError(WatersiemError):
    """Metric computation over mismatched or degenerate inputs."""


class ServiceError(WatersiemError):
    """The live service cannot start or cannot honor a request."""
