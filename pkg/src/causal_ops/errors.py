"""Shared exception types."""


class CausalOpsError(Exception):
    """Base class for all toolkit errors."""


class PreconditionViolated(CausalOpsError):
    """An operation was called outside its stated domain."""


class DimensionMismatch(CausalOpsError):
    """Operator or state dimensions do not match the declared factor layout."""


class NotPSD(CausalOpsError):
    """A matrix required to be positive semidefinite is not."""


class NotTracePreserving(CausalOpsError):
    """A channel required to be trace preserving is not."""


class NotNonselective(CausalOpsError):
    """A channel required to be nonselective (trace preserving) is not."""


class DegenerateOverlap(CausalOpsError):
    """Two worldlines share a segment instead of crossing transversally."""


class CrossingOutsideCouplingZone(CausalOpsError):
    """A probe route crosses a system worldline outside the coupling diamond."""


class NonlocalUnitary(CausalOpsError):
    """A coupling unitary touches a factor not involved in its crossing."""


class RouteNotFound(CausalOpsError):
    """No causal probe route exists for the requested geometry."""


class ScenarioError(CausalOpsError):
    """A scenario file failed to parse or validate."""
