"""Exception types raised across the toolkit.

Grouped by subsystem so callers can catch precisely: tensor file I/O,
mask generation, per-sample optimization, and the remote inpainting
backend. Plain ``ValueError`` is used for ordinary precondition
violations (shape mismatches, out-of-range arguments).
"""


class TensorFormatError(Exception):
    """File is not a readable NPY v1.0 container (bad magic, version, or header)."""


class UnsupportedTensorError(Exception):
    """NPY container is valid but uses a dtype or memory order we do not accept."""


class TensorCorruptionError(Exception):
    """NPY payload is shorter than the header-declared size."""


class DegenerateMaskError(ValueError):
    """Requested mask coverage rounds to zero pixels while coverage > 0."""


class DivergenceError(RuntimeError):
    """Optimization produced a non-finite loss; carries the offending step index."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")


class BackendTransportError(Exception):
    """The inpainting endpoint could not be reached (connection, timeout)."""


class BackendServerError(Exception):
    """The inpainting endpoint answered with a non-2xx status."""

    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(f"backend returned {status}: {message}")


class BackendProtocolError(Exception):
    """The endpoint answered 2xx but the payload violates the wire contract."""


class ExperimentConfigError(ValueError):
    """Experiment configuration is unusable (missing dataset, bad method name, ...)."""
