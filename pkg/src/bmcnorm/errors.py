"""Exception hierarchy.

``ModelError`` subclasses signal invalid user input (bad parameters, sizes
that cannot be realised); the CLI maps them to exit code 2. Everything else
under ``BmcError`` is a runtime failure.
"""


class BmcError(Exception):
    pass


class ModelError(BmcError, ValueError):
    pass


class NotStochastic(ModelError):
    pass


class NonPositiveEntry(ModelError):
    pass


class RankDeficient(ModelError):
    pass


class BadRatios(ModelError):
    pass


class TooSmall(ModelError):
    pass


class ConfigError(ModelError):
    pass


class DenseTooLarge(BmcError):
    pass


class TooLarge(BmcError):
    pass


class ShapeMismatch(BmcError, ValueError):
    pass


class NonFinite(BmcError, ArithmeticError):
    pass


class BudgetZero(BmcError, ValueError):
    pass


class TooFewSamples(BmcError, ValueError):
    pass
