"""Exception hierarchy.

Every error carries the name of the module that raised it so the CLI can
report provenance.
"""


class NodalFreeError(Exception):
    module = "nodalfree"


class NumericalFailure(NodalFreeError):
    """Base for failures of a numerical procedure (CLI exit code 3)."""


# matrix-core
class NotSkewHermitian(NodalFreeError, ValueError):
    module = "linalg"


class NotUnitary(NodalFreeError, ValueError):
    module = "linalg"


class NotHermitian(NodalFreeError, ValueError):
    module = "linalg"


class DimensionMismatch(NodalFreeError, ValueError):
    module = "linalg"


class ConvergenceFailure(NumericalFailure):
    module = "linalg"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


# transport
class IntegrationTooCoarse(NumericalFailure):
    module = "transport"


# holonomy
class NotParallelTransported(UserWarning):
    """Warning issued when a sigma matrix is built from a non-parallel family."""


class RepeatedIndex(NodalFreeError, ValueError):
    module = "holonomy"


class NodalPoint(NumericalFailure):
    """Phi[z] requested at a point where z vanishes."""

    module = "holonomy"


class VanishingOverlap(NumericalFailure):
    module = "holonomy"


# bloch
class GeodesicAmbiguous(NumericalFailure):
    module = "bloch"


class InvariantViolation(NumericalFailure):
    module = "bloch"


class DegenerateVertex(NodalFreeError, ValueError):
    module = "bloch"


# gates
class NotPowerOfTwo(NodalFreeError, ValueError):
    module = "gates"


class SearchSpaceTooLarge(NodalFreeError, ValueError):
    module = "gates"


# interferometer
class IncompleteExtraction(NumericalFailure):
    module = "interferometer"

    def __init__(self, message, found=(), missing_dim=0):
        super().__init__(message)
        self.found = list(found)
        self.missing_dim = missing_dim


# cli
class ConfigError(NodalFreeError, ValueError):
    module = "cli"

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(map(str, self.diagnostics)))
