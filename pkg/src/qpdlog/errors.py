"""Exception taxonomy shared across the package.

Every failure that callers are expected to handle programmatically gets its
own class; plain bugs stay as asserts.
"""


class QpdlogError(Exception):
    """Base class for all package-specific errors."""


class NoRepresentationFound(QpdlogError):
    """Sparse-representation search exhausted its budget without a hit."""


class FactorizationTimeout(QpdlogError):
    """Integer factorization budget ran out before completion.

    Carries the partial result so callers can degrade deliberately.
    """

    def __init__(self, n, factors, cofactor):
        self.n = n
        self.factors = dict(factors)  # prime -> exponent, certified part
        self.cofactor = cofactor      # composite remainder, > 1
        super().__init__(
            f"incomplete factorization of {n}: cofactor {cofactor} "
            f"({cofactor.bit_length()} bits) not split within budget"
        )


class RankDeficient(QpdlogError):
    """A linear system that heuristically ought to be full rank is not."""

    def __init__(self, msg, *, rank=None, needed=None, rows=None, matrix=None):
        self.rank = rank
        self.needed = needed
        self.rows = rows
        self.matrix = matrix  # partial relation matrix, reusable by fallbacks
        super().__init__(msg)


class BaseSystemRankDeficient(RankDeficient):
    """The linear-polynomial base system did not determine every unknown."""


class NoSolution(QpdlogError):
    """Linear solve has no solution (verified, not a numerical artifact)."""


class DegenerateModulus(QpdlogError):
    """The working prime divides q^2 - 1, so constant logs are ambiguous."""


class TrapLoop(QpdlogError):
    """A trap relation produced another trap on its right-hand side."""


class NonInvertibleCoefficient(QpdlogError):
    """A relation coefficient that must be inverted vanishes mod ell."""


class NotInSubgroup(QpdlogError):
    """Discrete-log target is not in the subgroup generated by the base."""


class NotInRowSpan(QpdlogError):
    """Left-solve target vector is not in the row span of the matrix."""


class DivisionByZeroPoly(QpdlogError):
    """Polynomial division by the zero polynomial."""


class CycleDetected(QpdlogError):
    """Descent recursion re-entered a polynomial already on the stack."""


class DeadlineExceeded(QpdlogError):
    """A wall-clock budget ran out before the computation finished."""


class PrimePowerFailed(QpdlogError):
    """One prime-power subproblem of a full dlog could not be finished.

    Carries the failing prime power and the underlying cause.
    """

    def __init__(self, prime, exponent, cause):
        self.prime = prime
        self.exponent = exponent
        self.cause = cause
        super().__init__(f"dlog mod {prime}^{exponent} failed: {cause}")


class VerificationFailed(QpdlogError):
    """An exactness check failed: a computed log, certificate, or identity."""


class InternalCountMismatch(QpdlogError):
    """An enumeration produced the wrong cardinality for a known formula."""
