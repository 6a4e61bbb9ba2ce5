"""Exception types shared across the package.

Every exception raised deliberately by this package derives from
:class:`BetheSolveError`, so callers can catch one type at the boundary.
"""


class BetheSolveError(Exception):
    """Base class for all errors raised by this package."""


class ZeroOrNegativePotential(BetheSolveError):
    """A potential entry is <= 0 where strict positivity is required.

    The enumeration oracle has a dedicated zero-tolerant path; everywhere
    else potentials must be strictly positive so their logs are finite.
    """


class NonFinitePotential(BetheSolveError):
    """A potential entry is NaN or infinite."""


class SideTooSmall(BetheSolveError):
    """Grid side length below the minimum for the requested topology."""


class UnknownEdge(BetheSolveError):
    """An edge was referenced that is not present in the graph."""


class NumericOverflow(BetheSolveError):
    """An intermediate product or exponential left the finite float range."""


class MarginalOutOfPolytope(BetheSolveError):
    """Marginal values violate the local consistency constraints."""


class BudgetExhausted(BetheSolveError):
    """An iterative solver hit its iteration cap before converging.

    Carries the partial result so callers can inspect the trajectory.
    """

    def __init__(self, message, result=None, trace=None):
        super().__init__(message)
        self.result = result
        self.trace = trace


class DeltaTooLarge(BetheSolveError):
    """A requested boundary margin exceeds the model's safe value."""


class QuantizedPairwiseFailure(BetheSolveError):
    """The fixed-precision solver could not certify a pairwise subproblem."""


class DegenerateSlice(BetheSolveError):
    """A categorical pair update hit a slice with too little mass."""


class TooLargeForEnumeration(BetheSolveError):
    """The model has too many configurations for exact enumeration."""


class NotATree(BetheSolveError):
    """A tree-only routine received a graph with a cycle or disconnection."""


class ModelFormatError(BetheSolveError):
    """A model document is malformed or internally inconsistent."""
