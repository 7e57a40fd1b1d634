"""Errors raised by the jumptail modules."""


class JumptailError(Exception):
    """Base class for every error raised deliberately by jumptail."""


# potentials
class InvalidPotential(JumptailError, ValueError):
    """A potential family violates its construction invariants."""


class DegenerateLeadingCoefficient(JumptailError, ValueError):
    """The derivative polynomial loses its leading term at the requested alpha."""


class NoTransitionInRange(JumptailError, ValueError):
    """The stable-equilibrium count agrees at both ends of an alpha range."""


class NoBranchOnSide(JumptailError, ValueError):
    """No equilibrium branch emanates from alpha_c on the requested side."""


# jumpmap
class BelowThreshold(JumptailError, ValueError):
    """The post-crossing branch is undefined at or below alpha_c."""


class NotInvertible(JumptailError, ValueError):
    """A loss level cannot be mapped back to an offset above alpha_c."""


class NoHeavyTailRegime(JumptailError, ValueError):
    """Neither the fluctuation-driven nor the parameter-tail-driven regime applies."""


# sampling
class InvalidDistribution(JumptailError, ValueError):
    """Distribution parameters are outside the family's domain."""


class OutOfRange(JumptailError, ValueError):
    """A probability level lies outside the open unit interval."""


class NoThresholdMass(JumptailError, ValueError):
    """The control parameter never reaches the critical threshold."""


# evt
class EmptySample(JumptailError, ValueError):
    """A statistic was requested for an empty sample."""


class TooFewExceedances(JumptailError, ValueError):
    """Not enough threshold exceedances to fit a tail model."""


class DegenerateExcesses(JumptailError, ValueError):
    """All excesses are equal, so the likelihood has no interior maximum."""


class PwmDegenerate(JumptailError, ValueError):
    """Probability-weighted moments do not define a GPD."""


class InsufficientPositiveValues(JumptailError, ValueError):
    """The Hill estimator needs k + 1 strictly positive order statistics."""


class DegenerateTail(JumptailError, ZeroDivisionError):
    """The mean log-ratio of the upper order statistics is zero."""


# verify
class InvalidGrid(JumptailError, ValueError):
    """A loss grid contains levels at or below the baseline loss."""


# config / cli
class ConfigParseError(JumptailError, ValueError):
    """A scenario file could not be read as JSON."""


class ConfigValidationError(JumptailError, ValueError):
    """A scenario file parsed but failed validation.

    Attributes
    ----------
    failures : list[str]
        every validation failure found, in the order checks were made
    """

    def __init__(self, failures: list):
        self.failures = list(failures)
        super().__init__(
            "Invalid scenario configuration:\n" + "\n".join(f"  - {f}" for f in self.failures)
        )


class ArtifactIoError(JumptailError, OSError):
    """Run artifacts could not be written."""
