"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class BracketError(ValueError):
    """Root-finding bracket without a sign change."""


class UnsupportedWeightsError(ValueError):
    """Combiner that only accepts equal weights received unequal ones."""


class StateError(ValueError):
    """Operation requested on a region in an incompatible state."""


class ConnectivityError(ValueError):
    """Treatment network is not connected."""

    def __init__(self, msg, components=None):
        super().__init__(msg)
        self.components = components or []


class SpanError(ValueError):
    """Dropping a study would leave projections that no longer span R^d."""

    def __init__(self, msg, dropped=None):
        super().__init__(msg)
        self.dropped = list(dropped or [])


class NumericError(ArithmeticError):
    """A numerical routine failed to produce a finite answer."""


class ConvergenceWarning(UserWarning):
    pass
