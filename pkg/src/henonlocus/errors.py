"""Exception hierarchy.

Errors split into three families: usage/numerical errors (exit code 1 at the
CLI), and "model-check failures" (exit code 2) which flag that a computation
contradicted a structural expectation rather than merely failing to converge.
"""


class HenonLocusError(Exception):
    """Base class for all package errors."""


# -- numerical / usage -------------------------------------------------------

class EscapeOverflow(HenonLocusError):
    """An orbit coordinate exceeded the overflow threshold (escaped-to-infinity)."""


class NotEscaping(HenonLocusError):
    """Point stayed bounded at the tested depth; escape-rate data undefined."""


class SlowConvergence(HenonLocusError):
    """Dyadic refinement did not settle within the depth budget (near Julia set)."""


class EmptyWindow(HenonLocusError):
    """The admissible radius window is empty: parameters outside the working region."""


class TubeRadiusFailure(HenonLocusError):
    """No admissible inner tube radius (discriminant or bracket failure)."""


class NewtonDivergence(HenonLocusError):
    """A Newton solve failed to converge."""


class ZeroGradient(HenonLocusError):
    """Gradient pair vanished where a direction was required."""


class ZeroOnContour(HenonLocusError):
    """Argument-principle contour passes too close to a zero."""


class PhaseJump(HenonLocusError):
    """Phase-tracking refinement exhausted without resolving a jump."""


class ResolutionTooCoarse(HenonLocusError):
    """Grid components merged; caller should refine."""


class OrbitLeftBox(HenonLocusError):
    """An iterate needed for coding left the dynamical box."""


class AmbiguousMembership(HenonLocusError):
    """Point sits in the shell where the winding test is inconclusive."""


class ComponentCountMismatch(HenonLocusError):
    """Connected-component count differs from the expected value."""


class WrongItinerary(HenonLocusError):
    """A periodic orbit solve converged to an orbit with a different code."""


class StepCollision(HenonLocusError):
    """Two continued orbits merged; continuation step too large."""


class CertificationLost(HenonLocusError):
    """A parameter-loop sample left the certified region."""


class RepolishFailure(HenonLocusError):
    """Newton re-polish of a mapped locus point failed."""


class ContinuationBreak(HenonLocusError):
    """Locus continuation lost the root across a grid gap."""


class SlopeBoundViolation(HenonLocusError):
    """A traced leaf left its cone; region hypothesis failed."""


# -- model-check failures (CLI exit code 2) ----------------------------------

class ModelCheckFailure(HenonLocusError):
    """A structural claim checked numerically came out false."""


class MultipleFound(ModelCheckFailure):
    """More than one fundamental-domain visit on a single orbit."""


class NoneFound(ModelCheckFailure):
    """No fundamental-domain visit within the search range."""


class DisconnectedSheets(ModelCheckFailure):
    """Handle continuation fronts did not connect (two-disk configuration)."""


class BoundaryCircleCountMismatch(ModelCheckFailure):
    """A handle region did not meet the locus in exactly two boundary circles."""


class ExitFaceViolation(ModelCheckFailure):
    """A boundary leaf crossed a face it should not cross."""


class TipNotFound(ModelCheckFailure):
    """No parabola tip found inside the expected disk."""


class StraighteningDegenerate(ModelCheckFailure):
    """A straightening-map partial derivative vanished on a sample."""


class OutsideStrip(ModelCheckFailure):
    """A tangency root left the vertical/horizontal strip it is trapped in."""
