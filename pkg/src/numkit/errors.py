#!/usr/bin/env python3
"""
Error hierarchy for the UQCM simulator

Every failure raised by the simulator derives from UQCMError, which is a
ValueError so callers that only know about ValueError keep working.
NumericalFailure groups the errors the CLI maps to exit code 3; the
configuration error maps to exit code 2.
"""


class UQCMError(ValueError):
    """Base class for all simulator errors"""


class ConfigInvalid(UQCMError):
    """Configuration file or device parameters are unusable"""


class NotNormalized(UQCMError):
    """Input amplitudes do not satisfy |alpha|^2 + |beta|^2 = 1"""


class NumericalFailure(UQCMError):
    """A numerical routine breached one of its tolerances"""


class NonHermitianInput(NumericalFailure):
    """Matrix expected to be Hermitian is not (within tolerance)"""


class ShapeMismatch(NumericalFailure):
    """Operand dimensions disagree with the declared subsystem shape"""


class ConvergenceFailure(NumericalFailure):
    """Eigen-solver or iterative solve did not converge"""


class ZeroDetuning(NumericalFailure):
    """Dispersive formula evaluated at zero qubit-resonator detuning"""


class ScheduleInvalid(NumericalFailure):
    """Pulse schedule has non-positive durations or impossible targets"""


class StepTooLarge(NumericalFailure):
    """Integrator step is too coarse for the requested accuracy"""


class NotDensityMatrix(NumericalFailure):
    """Matrix is not Hermitian, unit-trace and positive semidefinite"""


class SingularConfusion(NumericalFailure):
    """Readout confusion matrix cannot be inverted (F0 + F1 <= 1)"""


class IncompleteSettings(NumericalFailure):
    """Tomography records do not cover every required setting"""


class RankDeficient(NumericalFailure):
    """Probe set does not span the operator space"""
