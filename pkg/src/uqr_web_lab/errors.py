"""Exception hierarchy.  Every error the library raises derives from ``UqrError``."""


class UqrError(Exception):
    """Base class."""


class PreconditionError(UqrError, ValueError):
    """An argument is outside the documented domain of an operation."""


class EvaluationError(UqrError):
    """A map produced a non-finite value where a finite one was required."""

    def __init__(self, message: str, point=None):
        super().__init__(message if point is None else f"{message} at {point!r}")
        self.point = point


class ThresholdTooSmallError(PreconditionError):
    """M(R, f) <= R: the radius is below the growth threshold."""


class UnreliableEstimateError(UqrError):
    """Too many degenerate cells in a dilatation estimate."""


class ConvergenceError(UqrError):
    """An iteration failed to settle; ``diagnostic`` carries the last values."""

    def __init__(self, message: str, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class OutsideInjectivityError(UqrError):
    """A local inverse left the region where the chart is injective."""


class NoValidMuError(PreconditionError):
    """No admissible exponent mu exists because d <= K."""


class NotExpandingError(UqrError):
    """No iterate of the map doubles every test radius."""


class RefineGridError(UqrError):
    """A grid is too coarse; ``suggested`` is a resolution that may work."""

    def __init__(self, message: str, suggested: int | None = None):
        super().__init__(message)
        self.suggested = suggested


class SeedChainError(UqrError):
    """Continuation along a curve broke at ``index``."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (vertex {index})")
        self.index = index


class RingTooThinError(UqrError):
    """No power of the model map places the curve inside the ring."""


class RootRefinementError(UqrError):
    """Simultaneous root refinement failed twice; ``residual_roots`` lists stragglers."""

    def __init__(self, message: str, residual_roots=None):
        super().__init__(message)
        self.residual_roots = residual_roots


class GeometryError(UqrError):
    """Requested geometry violates a feasibility margin."""

    def __init__(self, message: str, margin: str | None = None, value: float | None = None):
        super().__init__(message)
        self.margin = margin
        self.value = value


class PieceCountError(UqrError):
    """A stage would exceed the piece-count guard."""


class NeedDeeperStageError(UqrError):
    """No computed piece is small enough."""


class IllConditionedError(UqrError):
    """Curves are too close for a reliable linking integral."""


class ConfigError(UqrError, ValueError):
    """Malformed or out-of-range run configuration."""
