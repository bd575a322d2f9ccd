"""Exception types raised by the samplers, models and oracles."""


class DiluteGasError(Exception):
    """Base class for all package errors."""


class InsufficientSupport(DiluteGasError):
    """A configuration's window does not cover the region a leap depends on."""


class NoClosedForm(DiluteGasError):
    """The model kind lacks an integrator for the requested coefficient."""


class TruncationInconclusive(DiluteGasError):
    """A truncated series cannot certify on which side of 1 the value lies."""


class UnboundedDensity(DiluteGasError):
    """An effective leap dropped below the declared uniform lower bound."""


class QueryOrderViolation(DiluteGasError):
    """A cell timeline was queried at a time later than an earlier query."""


class ClanCapExceeded(DiluteGasError):
    """The clan of ancestors grew beyond the configured cylinder cap."""


class EnvelopeViolation(DiluteGasError):
    """A mapped interaction range escaped the envelope used to build the clan."""


class BirthTimeCollision(DiluteGasError):
    """Two distinct cylinders share a birth time (floating-point collision)."""


class StateSpaceTooLarge(DiluteGasError):
    """Exact enumeration would exceed the configured state bound."""


class MultiplicityUnbounded(DiluteGasError):
    """Enumeration needs a multiplicity cap the model does not enforce."""


class NotRealizable(DiluteGasError):
    """The given edge sets are not disjoint closed dual-lattice curves."""


class CatalogTooLarge(DiluteGasError):
    """Contour enumeration exceeded its memory bound."""


class SpecError(DiluteGasError):
    """Malformed or unknown entry in a model specification file."""
