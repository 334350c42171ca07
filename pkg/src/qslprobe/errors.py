"""Exception hierarchy.

Every error raised on purpose by this package derives from ``QslProbeError``
so callers (notably the CLI) can map failures onto exit codes.
"""


class QslProbeError(Exception):
    pass


# -- linear algebra / dynamics ------------------------------------------------

class InvalidMatrix(QslProbeError, ValueError):
    """Matrix is not Hermitian / unitary / finite where it must be."""


class DimensionError(QslProbeError, ValueError):
    pass


class InvalidState(QslProbeError, ValueError):
    """State vector is not normalized or has the wrong shape."""


class BranchAmbiguity(QslProbeError, ArithmeticError):
    """An eigenphase sits so close to the logarithm branch cut that the
    nonnegative branch choice cannot be made reliably."""

    def __init__(self, message, phases=None):
        super().__init__(message)
        self.phases = phases


# -- speed limits --------------------------------------------------------------

class InvalidEnergy(QslProbeError, ValueError):
    pass


class InvalidDuration(QslProbeError, ValueError):
    pass


class InvalidFidelity(QslProbeError, ValueError):
    pass


# -- circuits / device -----------------------------------------------------------

class CircuitError(QslProbeError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownGate(CircuitError):
    pass


class BadIndex(CircuitError):
    pass


class CircuitSyntaxError(CircuitError):
    pass


class ConnectivityError(CircuitError):
    """Gate applied to qubits the device cannot couple directly."""


class DeviceConfigError(QslProbeError, ValueError):
    pass


class GateRealizationMismatch(DeviceConfigError):
    def __init__(self, gate, fidelity, message=None):
        self.gate = gate
        self.fidelity = fidelity
        super().__init__(
            message
            or f"drive for gate {gate!r} does not realize its unitary "
               f"(fidelity {fidelity:.9f})"
        )


class JobError(QslProbeError):
    pass


class EmptyJob(JobError, ValueError):
    pass


class BackendError(QslProbeError):
    pass


# -- estimation -----------------------------------------------------------------

class EstimationError(QslProbeError):
    pass


class InsufficientData(EstimationError):
    pass


class NegativeSlope(EstimationError):
    def __init__(self, slope, stderr):
        self.slope = slope
        self.stderr = stderr
        super().__init__(
            f"job time decreases with gate count (slope {slope:.3e} s, "
            f"stderr {stderr:.3e} s); estimate rejected"
        )


class NoPhysicalGate(EstimationError):
    pass
