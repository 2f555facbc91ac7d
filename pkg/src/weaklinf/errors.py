"""Exception hierarchy shared by all modules."""


class WeakLinfError(ValueError):
    """Base class for every error raised by this package."""


class NonPositiveMass(WeakLinfError):
    pass


class MetricAxiomViolation(WeakLinfError):
    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


class UnknownAtom(WeakLinfError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class WrongSpaceShape(WeakLinfError):
    pass


class UnsupportedDimension(WeakLinfError):
    pass


class NonPositiveT(WeakLinfError):
    pass


class NonPositiveM(WeakLinfError):
    pass


class HypothesisViolated(WeakLinfError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class EmptyLevelSet(WeakLinfError):
    pass


class IndexOutOfRange(WeakLinfError):
    pass


class NotInE(WeakLinfError):
    pass


class BadParams(WeakLinfError):
    pass
