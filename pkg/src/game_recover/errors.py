"""Exception hierarchy shared across the package."""


class GameRecoverError(Exception):
    """Base class for all package errors."""


class InvalidInputError(GameRecoverError, ValueError):
    """An argument violates a documented precondition."""


class GenerationError(GameRecoverError):
    """Random game construction failed (e.g. zero spectral radius)."""


class NoEquilibriumError(GameRecoverError):
    """The game's equilibrium subspace is trivial; only x* = 0 exists."""


class NumericalError(GameRecoverError):
    """A numerical routine produced an unusable result (non-finite, singular)."""
