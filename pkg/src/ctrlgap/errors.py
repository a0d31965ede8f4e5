"""Exception types shared across the package."""


class CtrlGapError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CtrlGapError):
    """Malformed configuration document or CLI usage."""


class UncontrollableGridError(CtrlGapError):
    """The Gram matrix of the discrete reachability map is singular to
    working precision, so projection onto the boundary-value set is
    unavailable on this grid."""


class SimulationOverflowError(CtrlGapError):
    """Non-finite values appeared during forward integration, which
    signals instability of the explicit scheme at this step size."""


class InfeasibleIntersectionError(CtrlGapError):
    """Divergence of Dykstra's correction term: the two constraint sets
    most likely do not intersect."""


class BracketError(CtrlGapError):
    """No feasible bound was found below the search cap while bracketing
    the critical bound."""


class OracleSizeError(CtrlGapError):
    """Problem too large for exhaustive active-set enumeration."""


class AnalyticCaseError(CtrlGapError):
    """The analytic critical solution's case dispatch failed to produce a
    verifiable switching time."""
