"""Exception taxonomy shared across the package."""


class HmflowError(Exception):
    """Base class for all package errors."""


class IncompatibleWeight(HmflowError):
    """Weight function sampled on a grid that does not match the domain grid."""


class UnsupportedEmbedding(HmflowError):
    """No Euclidean embedding is available for this manifold model."""


class DegenerateGram(HmflowError):
    """A Gram matrix failed positive-definiteness."""


class PoleEvaluation(HmflowError):
    """Equivariant quantity requested at or beyond a pole."""


class BlowupDetected(HmflowError):
    """Nodal energy density exceeded the blow-up guard."""


class CFLViolation(HmflowError):
    """Requested time step exceeds the automatic stability bound by 10x."""


class ConfigError(HmflowError):
    """Malformed or inconsistent run configuration."""


class SpecError(HmflowError):
    """Initial-map specification is out of range for the requested scenario."""


class InsufficientHistory(HmflowError):
    """Residual evaluation needs three consecutive stored time slices."""


class WindowTooShort(HmflowError):
    """Time series does not cover the requested fitting window."""


class NotConverged(HmflowError):
    """Limit classification requested on a run that did not converge."""
