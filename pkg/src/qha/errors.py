"""Exception types shared by the numerical modules."""


class ConfigurationError(ValueError):
    """Invalid grid, basis or run configuration."""


class GridMismatchError(ValueError):
    """Operands live on different lattices or bases."""


class SupportOverflowError(ValueError):
    """A shift or product would push mass across the edge of the lattice."""


class AccuracyError(RuntimeError):
    """A discretisation precondition failed; ``measured`` holds the offending value."""

    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class LeakageError(AccuracyError):
    """Basis functions or phase-space shifts are not resolved by the lattice."""
