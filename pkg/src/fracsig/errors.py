"""Exception types raised across the library.

Each solver / transform / fitting routine raises one of these instead of a
bare ValueError so callers (and the CLI) can react per failure kind.
"""


class FracsigError(Exception):
    """Base class for all library-specific errors."""


class DegeneratePoint(FracsigError):
    """A closed-form derivative was requested where it is not defined."""


class MissingDerivative(FracsigError):
    """An input field cannot supply a derivative the operation needs."""


class OutOfDomain(FracsigError):
    """A rescaled/translated evaluation left the domain of the input field."""


class SolverFailure(FracsigError):
    """A linear-algebra backend failed to converge."""


class NotConverged(FracsigError):
    """Iteration budget exhausted; carries the best iterate found so far."""

    def __init__(self, message, best=None, residuals=None):
        super().__init__(message)
        self.best = best
        self.residuals = residuals


class GridTooCoarse(FracsigError):
    """Fewer grid nodes than the discretization can meaningfully use."""


class EmptyFreeBoundary(FracsigError):
    """The contact mask is constant, so no free boundary exists."""


class DegenerateFit(FracsigError):
    """A least-squares normal system was singular."""


class TauOutOfRange(FracsigError):
    """Barrier exponent tau outside the admissible interval."""


class GraphTooRough(FracsigError):
    """The free-boundary graph exceeds the configured regularity threshold."""


class MonotonicityViolated(FracsigError):
    """The transform's monotonicity assumptions fail on the input field.

    Carries the offending node indices in ``nodes``.
    """

    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = nodes if nodes is not None else []


class ResampleGap(FracsigError):
    """Scattered-to-grid resampling left requested cells empty."""


class NegativeRadicand(FracsigError):
    """A fractional root of a derivative quantity went genuinely negative."""


class InsufficientSamples(FracsigError):
    """Not enough sample points to determine the requested fit."""


class BoundaryConditionViolated(FracsigError):
    """An input field violates the boundary condition it is required to meet."""


class AxisSingularity(FracsigError):
    """Finite-difference evaluation requested too close to a degenerate axis."""


class DivisionNearZero(FracsigError):
    """A nodal ratio was requested where the denominator dips below the floor."""


class ConfigInvalid(FracsigError):
    """Experiment configuration failed validation; names the offending field."""


class IoFailure(FracsigError):
    """Artifact files could not be written."""
