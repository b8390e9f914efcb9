"""Exception hierarchy shared by all solver stages."""


class SuperlensError(Exception):
    """Base class for numerical failures raised by this package."""


class ResonanceError(SuperlensError):
    """An interface determinant vanished (to tolerance) for some mode."""

    def __init__(self, n: int, value: complex, message: str = ""):
        self.n = n
        self.value = value
        super().__init__(message or f"resonant configuration: |phi_{n}| = {abs(value):.3e}")


class DegenerateModeError(SuperlensError):
    """A vertical wavenumber beta_n or gamma_n vanished (Wood anomaly)."""

    def __init__(self, n: int, which: str, value: complex):
        self.n = n
        self.which = which
        self.value = value
        super().__init__(f"degenerate mode n={n}: |{which}_n| = {abs(value):.3e}")


class ConditioningError(SuperlensError):
    """A block pivot in the forward solve was numerically singular."""

    def __init__(self, level: int, rcond: float):
        self.level = level
        self.rcond = rcond
        super().__init__(
            f"near-singular block pivot at y-level {level} (rcond={rcond:.3e}); "
            "consider a small loss parameter, e.g. loss=1e-8"
        )


class AliasingError(ValueError):
    """Too few samples to resolve the requested Fourier band."""
