"""Exception types raised by mcdiff.

Every error derives from :class:`MixtureError` so callers (the CLI in
particular) can separate validation failures from programming errors.
"""


class MixtureError(ValueError):
    """Base class for all validation and numerical-contract failures."""


class NonPositiveTemperature(MixtureError):
    pass


class NonPositiveDensity(MixtureError):
    pass


class NegativeFraction(MixtureError):
    pass


class FractionSumOutOfRange(MixtureError):
    pass


class ZeroFraction(MixtureError):
    """A vanishing fraction was hit where ln x or X^(-1/2) is required."""


class DimensionMismatch(MixtureError):
    pass


class SingularD0(MixtureError):
    """The trace of the adjugate is numerically zero (rank below N-1)."""


class KernelMismatch(MixtureError):
    """Supplied kernel vectors do not annihilate the matrix."""


class NotSymmetric(MixtureError):
    pass


class PreconditionViolated(MixtureError):
    pass


class AsymmetricFriction(MixtureError):
    pass


class BinaryMixture(MixtureError):
    """Operation is only defined for three or more species."""


class MissingStructure(MixtureError):
    """An Onsager closure lacks its (A, S) decomposition."""


class NonPositiveDiffusivity(MixtureError):
    pass


class DegenerateTernary(MixtureError):
    pass


class InvalidParameter(MixtureError):
    pass


class StabilityViolation(MixtureError):
    """Explicit time step exceeds the diffusive stability bound."""
