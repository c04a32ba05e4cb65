"""Exception hierarchy shared by all modules.

Every domain error carries a stable ``kind`` string that the CLI maps to
``{"error": {"kind": ..., "detail": ...}}`` with exit code 1.
"""


class EfxLabError(Exception):
    """Base class for all domain errors."""

    kind = "error"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class MalformedValuationError(EfxLabError):
    """A table valuation is missing an entry or has invalid parameters."""

    kind = "malformed-valuation"


class InstanceTooLargeError(EfxLabError):
    """An exhaustive operation was asked to enumerate beyond its cap."""

    kind = "instance-too-large"


class InvalidEpsilonError(EfxLabError):
    """Perturbation epsilon violates ``eps > 0`` and ``eps * 2**(m+1) < delta``."""

    kind = "invalid-epsilon"


class PreconditionError(EfxLabError):
    """An operation's stated precondition does not hold for the input."""

    kind = "precondition"


class DegeneracyError(EfxLabError):
    """A step that requires strict comparisons hit a tie mid-run."""

    kind = "degeneracy"


class NotMmsFeasibleError(EfxLabError):
    """Agent 3's valuation violated the two-partition guarantee the solver relies on.

    Carries the violating 2-partition of the regrouped goods as bitmasks.
    """

    kind = "not-mms-feasible"

    def __init__(self, detail: str, partition=None):
        super().__init__(detail)
        self.partition = partition


class ThresholdNotMetError(EfxLabError):
    """The derandomized finder needs ``k * (1 - 1/d)**(k-1) < 1`` and it fails."""

    kind = "threshold-not-met"


class StructuralContradictionError(EfxLabError):
    """The permutation finder reached a state its counting argument rules out."""

    kind = "structural-contradiction"


class InternalInvariantError(EfxLabError):
    """An internal invariant failed; indicates a bug, not bad input."""

    kind = "internal-invariant-violation"
