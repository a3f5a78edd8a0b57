"""Uniform spatial grid, wavefunction container and coherent states.

All states use continuum normalization, ``sum(|psi|**2) * dx == 1``, so that
``|psi(x)|**2`` is a probability density independent of the grid spacing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainTooSmallError, ShapeError

DEFAULT_N_POINTS = 2048
DEFAULT_X_MAX = 8.0


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic grid ``x_j = x_min + j*dx`` for ``j = 0..n_points-1``."""

    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if not isinstance(self.n_points, (int, np.integer)) or not _is_power_of_two(int(self.n_points)):
            raise ConfigurationError(f"n_points must be a power of two >= 2, got {self.n_points!r}")
        if not self.x_max > self.x_min:
            raise ConfigurationError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        k.flags.writeable = False
        return k

    def momenta(self, tau: float) -> np.ndarray:
        """Momentum samples ``p = tau * k`` in FFT order."""
        return tau * self.k

    def p_max(self, tau: float) -> float:
        return tau * np.pi / self.dx


def make_grid(n_points: int = DEFAULT_N_POINTS, x_max: float = DEFAULT_X_MAX) -> SpatialGrid:
    """Symmetric grid on ``[-x_max, x_max)``."""
    if not x_max > 0:
        raise ConfigurationError(f"x_max must be positive, got {x_max}")
    return SpatialGrid(int(n_points), -float(x_max), float(x_max))


@dataclass
class WaveFunction:
    """Complex amplitudes sampled on a :class:`SpatialGrid`.

    ``amps`` is stored as a read-only copy; operations that change the state
    return a new instance.
    """

    grid: SpatialGrid
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128)
        if amps.shape != (self.grid.n_points,):
            raise ShapeError(f"amplitudes have shape {amps.shape}, grid has {self.grid.n_points} points")
        amps.flags.writeable = False
        self.amps = amps

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        """Continuum norm ``sum |psi|^2 dx``."""
        return float(np.sum(self.density) * self.grid.dx)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amps / np.sqrt(self.norm()))

    def boundary_amplitude(self) -> float:
        return float(max(abs(self.amps[0]), abs(self.amps[-1])))

    def mean_x(self) -> float:
        return float(np.sum(self.grid.x * self.density) * self.grid.dx / self.norm())

    def mean_p(self, tau: float) -> float:
        weights = np.abs(np.fft.fft(self.amps)) ** 2
        return float(np.sum(self.grid.momenta(tau) * weights) / np.sum(weights))

    def var_p(self, tau: float) -> float:
        weights = np.abs(np.fft.fft(self.amps)) ** 2
        p = self.grid.momenta(tau)
        mean = np.sum(p * weights) / np.sum(weights)
        return float(np.sum((p - mean) ** 2 * weights) / np.sum(weights))


@dataclass(frozen=True)
class SimParams:
    """Everything needed to run one kicked evolution."""

    K: float
    beta: float
    tau: float
    x0: float = 0.0
    p0: float = 0.0
    n_kicks: int = 8192
    grid: SpatialGrid = field(default_factory=make_grid)

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        # K = 0 is the free particle; the central point is elliptic only for 0 < K < 4.
        if not 0 <= self.K < 4:
            raise ConfigurationError(f"K must lie in [0, 4), got {self.K}")
        if int(self.n_kicks) < 1:
            raise ConfigurationError(f"n_kicks must be >= 1, got {self.n_kicks}")


def make_coherent_state(grid: SpatialGrid, tau: float, omega: float,
                        x0: float = 0.0, p0: float = 0.0) -> WaveFunction:
    """Harmonic-oscillator coherent state (m = 1, hbar -> tau) centred at (x0, p0).

    ``psi(x) = (omega/(pi tau))**(1/4) exp(i p0 x / tau - omega (x-x0)**2 / (2 tau))``,
    renormalized on the grid.  Position-independent phases are omitted.
    """
    if not omega > 0:
        raise ConfigurationError(f"omega must be positive, got {omega}")
    if not tau > 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    sigma_x = np.sqrt(tau / (2.0 * omega))
    reach = 6.0 * sigma_x
    if x0 - reach < grid.x_min or x0 + reach > grid.x_max:
        raise DomainTooSmallError(
            f"packet at x0={x0} with 6*sigma_x={reach:.3g} does not fit in [{grid.x_min}, {grid.x_max})"
        )
    x = grid.x
    amps = (omega / (np.pi * tau)) ** 0.25 * np.exp(1j * p0 * x / tau - omega * (x - x0) ** 2 / (2.0 * tau))
    return WaveFunction(grid, amps).normalized()


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """``<a|b> = sum conj(a_j) b_j dx``."""
    if a.grid != b.grid:
        raise ShapeError("states live on different grids")
    return complex(np.vdot(a.amps, b.amps) * a.grid.dx)


def save_snapshot(path, psi: WaveFunction) -> Path:
    """Write ``x,re,im`` rows with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("x,re,im\n")
        for xj, aj in zip(psi.grid.x, psi.amps):
            fh.write(f"{xj:.17g},{aj.real:.17g},{aj.imag:.17g}\n")
    return path


def load_snapshot(path) -> WaveFunction:
    """Inverse of :func:`save_snapshot`; the grid is reconstructed from the x column."""
    xs, amps = [], []
    with Path(path).open(newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows)
        if header != ["x", "re", "im"]:
            raise ConfigurationError(f"unexpected snapshot header {header}")
        for x, re, im in rows:
            xs.append(float(x))
            amps.append(complex(float(re), float(im)))
    n = len(xs)
    dx = xs[1] - xs[0]
    grid = SpatialGrid(n, xs[0], xs[0] + n * dx)
    if not np.allclose(grid.x, xs, rtol=0, atol=1e-12 * max(1.0, abs(grid.x_min))):
        raise ConfigurationError("snapshot x column is not a uniform grid")
    return WaveFunction(grid, np.array(amps))
