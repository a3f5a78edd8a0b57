"""Exception and warning types shared across the package.

Configuration problems (bad grids, bad parameters, bad CLI input) derive from
:class:`ConfigurationError`; problems discovered while computing (regime
violations, spectral resolution, wavefunction leaks) derive from
:class:`NumericalError`.  The CLI maps the two families to exit codes 2 and 3.
"""


class KickfidError(Exception):
    """Base class for all package errors."""


class ConfigurationError(KickfidError, ValueError):
    """Invalid static configuration (grid, parameters, CLI arguments)."""


class DomainTooSmallError(ConfigurationError):
    """A wavepacket does not fit inside the spatial grid."""


class ShapeError(KickfidError, ValueError):
    """Operands live on different grids or have incompatible shapes."""


class NumericalError(KickfidError):
    """Failure detected during a computation."""


class RegimeError(NumericalError, ValueError):
    """Parameters fall outside the regime where a formula is defined."""


class LeakError(NumericalError):
    """Wavefunction amplitude at the grid boundary is too large."""

    def __init__(self, amplitude, tol, kick=None):
        self.amplitude = amplitude
        self.tol = tol
        self.kick = kick
        where = "" if kick is None else f" at kick {kick}"
        super().__init__(
            f"boundary amplitude {amplitude:.3e} exceeds {tol:.1e}{where}"
        )


class ResolutionError(NumericalError):
    """A spectral band is too narrow for the available frequency resolution."""


class NoPeakError(NumericalError):
    """No local maximum lies strictly inside a spectral band."""


class LeakWarning(UserWarning):
    """Emitted when the evolving state reaches the periodic boundary."""

    def __init__(self, kick, amplitude):
        self.kick = kick
        self.amplitude = amplitude
        super().__init__(f"boundary amplitude {amplitude:.3e} at kick {kick}")
