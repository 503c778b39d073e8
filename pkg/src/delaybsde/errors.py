"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class UnsupportedPayoffError(NotImplementedError):
    """The payoff has no closed form for the requested measure or quantity."""
