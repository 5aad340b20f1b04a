class SpecFDAError(Exception):
    """Base class for all package errors."""


class NonSymmetric(SpecFDAError, ValueError):
    pass


class NonFinite(SpecFDAError, ValueError):
    pass


class NegativeSpectrum(SpecFDAError, ValueError):
    """A matrix expected to be PSD has a clearly negative eigenvalue."""


class BadSize(SpecFDAError, ValueError):
    pass


class ShapeMismatch(SpecFDAError, ValueError):
    pass


class OutOfDomain(SpecFDAError, ValueError):
    pass


class TruncationTooLarge(SpecFDAError, ValueError):
    pass


class BadLambda(SpecFDAError, ValueError):
    pass


class OutOfSpectralRange(SpecFDAError, ValueError):
    pass


class BadExponent(SpecFDAError, ValueError):
    pass


class NoPairs(SpecFDAError, ValueError):
    pass


class PairCapExceeded(SpecFDAError, MemoryError):
    pass


class BadRule(SpecFDAError, ValueError):
    pass


class BadVariances(SpecFDAError, ValueError):
    pass


class BadScheme(SpecFDAError, ValueError):
    pass


class DegenerateCells(SpecFDAError, ValueError):
    pass


class ConfigError(SpecFDAError, ValueError):
    pass


class BadSampleSet(SpecFDAError, ValueError):
    pass
