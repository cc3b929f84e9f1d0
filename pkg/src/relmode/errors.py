"""Exception types raised across the package."""


class RelmodeError(Exception):
    """Base class for all package-specific errors."""


class NotInfinitesimallySymplectic(RelmodeError):
    pass


class IllConditionedSpectrum(RelmodeError):
    pass


class KreinViolation(RelmodeError):
    pass


class FrequencyNotInSpectrum(RelmodeError):
    pass


class DegenerateForm(RelmodeError):
    pass


class NotInvariant(RelmodeError):
    pass


class DegenerateRestriction(RelmodeError):
    pass


class NotCanonicalAction(RelmodeError):
    pass


class UnknownSubgroup(RelmodeError):
    pass


class UnsupportedGroup(RelmodeError):
    pass


class NonPeriodicGenerator(RelmodeError):
    pass


class NotSimpleAction(RelmodeError):
    pass


class NonIntegerBound(RelmodeError):
    pass


class StepLimitExceeded(RelmodeError):
    pass


class NonFiniteState(RelmodeError):
    pass


class NotRelativeEquilibrium(RelmodeError):
    pass


class DegenerateSplit(RelmodeError):
    pass


class UnsupportedCase(RelmodeError):
    pass


class IndefiniteQuadraticForm(RelmodeError):
    pass


class RadialToMaxOrder(RelmodeError):
    """The Hamiltonian is radial through the maximal probed order.

    Signals that only relative equilibria can exist near the equilibrium;
    callers should report and stop the orbit search.
    """


class EmptyLevelSet(RelmodeError):
    pass


class RankDeficientConstraints(RelmodeError):
    pass


class NoConvergence(RelmodeError):
    pass


class BranchFold(RelmodeError):
    """Corrector failed before r_max; carries the partial branch."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class MultiplierBlowup(RelmodeError):
    pass


class ConvergedToRelativeEquilibrium(RelmodeError):
    """Shooting converged but the nontriviality witness failed.

    The converged point is attached so callers can report it distinctly
    from a genuine relative periodic orbit.
    """

    def __init__(self, message, point=None, witness=None):
        super().__init__(message)
        self.point = point
        self.witness = witness


class InvalidPerturbation(RelmodeError):
    pass


class ConfigError(RelmodeError):
    pass
