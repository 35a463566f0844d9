"""Exception types shared across the toolkit."""


class GLInputError(ValueError):
    """Malformed input: dimension mismatch, bad parameter value."""


class GeometryError(GLInputError):
    """Requested structure does not fit in the torus."""


class NormalizationError(GLInputError):
    """epsilon >= 1: |log(eps)| normalization is meaningless."""


class NumericalBlowupError(RuntimeError):
    """NaN/Inf produced by a time step; carries the step index."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"non-finite field after step {step_index}")


class TrajectoryRangeError(ValueError):
    """Requested time lies outside the stored trajectory."""


class DecompositionUnstableError(RuntimeError):
    """Winding too far from an integer vector (vortex crossing a cycle)."""


class ExtractionFailureError(RuntimeError):
    """Vortex-set stitching produced an open chain; carries cell diagnostics."""

    def __init__(self, message, cells=None):
        self.cells = cells or []
        super().__init__(message)


class TrackingError(RuntimeError):
    """Filament lost before the tracking window ended."""
