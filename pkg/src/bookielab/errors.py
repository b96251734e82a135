"""Exception types shared across the package."""


class BookieLabError(Exception):
    """Base class for all package-specific errors."""


class UndefinedTailError(BookieLabError):
    """Conditioning event {p >= a} has zero probability."""


class MeanMismatchError(BookieLabError):
    """Second-order dominance comparison requires equal means."""


class NoBetObservedError(BookieLabError):
    """Belief estimation is undefined when the bettor stayed out."""


class NoInteriorMaxError(BookieLabError):
    """Price optimisation terminated on the search-box boundary."""


class DegenerateSeriesError(BookieLabError):
    """Regret series has a non-positive tail; rate fit is undefined."""


class ConfigError(BookieLabError):
    """Experiment configuration failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class SolverError(BookieLabError):
    """Benchmark price computation failed."""
