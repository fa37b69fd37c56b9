"""Exception hierarchy shared by the engines and the CLI."""


class PwtError(Exception):
    """Base class for all errors raised by pwtrans."""


class ValidationError(PwtError, ValueError):
    """Malformed input: bad interval, bad region, bad flag value."""


class SpecError(ValidationError):
    """A map specification is inconsistent (cover, self-mapping, rank)."""


class DomainError(ValidationError):
    """A set handed to a map is not contained in its domain."""


class InvariantError(PwtError, AssertionError):
    """An internal invariant (e.g. monotone orbit) was violated.

    This always indicates a bug in the engine, never bad user input.
    """


class NotFiniteError(PwtError):
    """An operation needed a stabilized attractor but the cap was reached."""
