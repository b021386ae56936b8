"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`UltraError`,
so callers (and the CLI) can separate configuration problems from solver
failures with a single ``except``.
"""


class UltraError(Exception):
    """Base class for all library errors."""


class ConfigurationError(UltraError, ValueError):
    """Incompatible domain/basis/boundary-condition combination or bad option."""


class DomainError(UltraError, ValueError):
    """A point lies outside the closed domain."""


class IllConditionedBasisError(UltraError):
    """Gram matrix is numerically singular."""


class SpaceMismatchError(UltraError, ValueError):
    """Two objects that must live on the same space do not."""


class EvaluationError(UltraError, ValueError):
    """A user callback returned non-finite values."""


class DegenerateCandidatesError(UltraError):
    pass


class IndependenceError(UltraError):
    """Evaluation matrix at a point set is singular."""


class ArityError(UltraError, ValueError):
    pass


class UnsupportedFamilyError(UltraError):
    """Requested operation is not available for this basis family."""


class NumericError(UltraError):
    pass


class PreconditionError(UltraError, ValueError):
    pass


class SingularSpectrumError(UltraError):
    def __init__(self, index, eigenvalue):
        self.index = index
        self.eigenvalue = eigenvalue
        super().__init__(f"near-zero eigenvalue mu_{index} = {eigenvalue:.3e}")


class ResonanceError(UltraError):
    def __init__(self, k, l, denominator):
        self.k = k
        self.l = l
        self.denominator = denominator
        super().__init__(f"resonant mode (k, l) = ({k}, {l}): denominator {denominator:.3e}")


class NonCoerciveError(UltraError):
    """All descent runs diverged towards -infinity."""


class GeometryViolatedError(UltraError):
    """Mountain-pass geometry does not hold."""


class ContinuationFailedError(UltraError):
    pass


class NestingError(UltraError):
    """Spaces in a sweep are not nested."""


class SolverError(UltraError):
    pass
