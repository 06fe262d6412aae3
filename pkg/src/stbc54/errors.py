"""Exception types shared across modules."""


class STBCError(Exception):
    pass


class RankDeficient(STBCError):
    """Orthogonalized column norm fell below the rank tolerance."""


class DependentWeights(STBCError):
    """Weight matrices are not linearly independent over the reals."""


class PatternViolation(STBCError):
    """R lacks the zero pattern needed for conditional slicing."""


class TooLarge(STBCError):
    """Exhaustive enumeration guard exceeded."""


class ConfigInvalid(STBCError):
    pass
