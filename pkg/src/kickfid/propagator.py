"""Split-operator evolution for one kick period with interactions at the kick.

One period applies the kick phase in position space,

    psi(x) -> psi(x) * exp((i/tau) * (K exp(-x^2/2) - beta |psi(x)|^2)),

followed by free flight ``exp(-i tau k^2 / 2)`` in wavenumber space.  Positive
``beta`` is a repulsive mean field; negative ``beta`` is attractive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import LeakWarning, ShapeError
from .grid import SimParams, SpatialGrid, WaveFunction

DEFAULT_LEAK_TOL = 1e-6

Observer = Callable[[int, WaveFunction], None]
TwinObserver = Callable[[int, WaveFunction, WaveFunction], None]


class KickPotentialCache:
    """Grid-aligned factors reused on every kick."""

    def __init__(self, grid: SpatialGrid, K: float, tau: float):
        self.grid = grid
        self.K = float(K)
        self.tau = float(tau)
        self.gauss = np.exp(-0.5 * grid.x ** 2)
        self.kick_phase = np.exp(1j * self.K * self.gauss / self.tau)
        self.free_phase = np.exp(-0.5j * self.tau * grid.k ** 2)

    def kick(self, amps: np.ndarray, beta: float) -> np.ndarray:
        if beta == 0.0:
            return amps * self.kick_phase
        density = amps.real ** 2 + amps.imag ** 2
        return amps * np.exp(1j * (self.K * self.gauss - beta * density) / self.tau)

    def free(self, amps: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self.free_phase * np.fft.fft(amps))

    def step(self, amps: np.ndarray, beta: float) -> np.ndarray:
        return self.free(self.kick(amps, beta))


def apply_kick(psi: WaveFunction, K: float, beta: float, tau: float) -> WaveFunction:
    """Multiply by the kick phase built from the pre-kick density."""
    x = psi.grid.x
    phase = (K * np.exp(-0.5 * x ** 2) - beta * psi.density) / tau
    return WaveFunction(psi.grid, psi.amps * np.exp(1j * phase))


def apply_free_flight(psi: WaveFunction, tau: float, duration: float = 1.0) -> WaveFunction:
    """Free evolution over ``duration`` kick periods, ``exp(-i tau k^2 duration / 2)``."""
    k = psi.grid.k
    amps = np.fft.ifft(np.exp(-0.5j * tau * duration * k ** 2) * np.fft.fft(psi.amps))
    return WaveFunction(psi.grid, amps)


@dataclass
class LeakMonitor:
    """Summarizes kicks where the boundary amplitude exceeded ``tol``."""

    tol: float = DEFAULT_LEAK_TOL
    count: int = 0
    first_kick: int | None = None
    max_amplitude: float = 0.0
    max_kick: int | None = None
    label: str = ""

    def check(self, kick: int, amps: np.ndarray) -> bool:
        amp = float(max(abs(amps[0]), abs(amps[-1])))
        if amp <= self.tol:
            return False
        self.count += 1
        if self.first_kick is None:
            self.first_kick = kick
        if amp > self.max_amplitude:
            self.max_amplitude = amp
            self.max_kick = kick
        return True

    @property
    def leaked(self) -> bool:
        return self.count > 0

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "tol": self.tol,
            "count": self.count,
            "first_kick": self.first_kick,
            "max_amplitude": self.max_amplitude,
            "max_kick": self.max_kick,
        }

    def warn(self):
        if self.leaked:
            warnings.warn(LeakWarning(self.first_kick, self.max_amplitude), stacklevel=3)


def step(psi: WaveFunction, params: SimParams, kick_index: int | None = None,
         leak_tol: float = DEFAULT_LEAK_TOL) -> WaveFunction:
    """One full period: kick, then free flight.

    Emits :class:`~kickfid.errors.LeakWarning` if the boundary amplitude of the
    result exceeds ``leak_tol``.
    """
    if psi.grid != params.grid:
        raise ShapeError("state and parameters use different grids")
    out = apply_free_flight(apply_kick(psi, params.K, params.beta, params.tau), params.tau)
    amp = out.boundary_amplitude()
    if amp > leak_tol:
        warnings.warn(LeakWarning(kick_index, amp), stacklevel=2)
    return out


def evolve(psi0: WaveFunction, params: SimParams, observers: Sequence[Observer] = (),
           n_kicks: int | None = None, leaks: LeakMonitor | None = None) -> WaveFunction:
    """Apply ``n_kicks`` periods, calling every observer with ``(kick, state)`` after each.

    ``n_kicks`` defaults to ``params.n_kicks``; passing 0 returns ``psi0``
    without calling observers.  Boundary leaks are collected in ``leaks``; when
    no monitor is supplied a single summary :class:`LeakWarning` is emitted.
    """
    if psi0.grid != params.grid:
        raise ShapeError("state and parameters use different grids")
    n = params.n_kicks if n_kicks is None else int(n_kicks)
    if n < 0:
        raise ValueError(f"n_kicks must be >= 0, got {n}")
    own_monitor = leaks is None
    monitor = LeakMonitor() if own_monitor else leaks
    cache = KickPotentialCache(params.grid, params.K, params.tau)
    amps = np.array(psi0.amps)
    state = psi0
    for kick in range(1, n + 1):
        amps = cache.step(amps, params.beta)
        monitor.check(kick, amps)
        if observers:
            state = WaveFunction(params.grid, amps)
            for obs in observers:
                obs(kick, state)
    if own_monitor:
        monitor.warn()
    return WaveFunction(params.grid, amps) if n else psi0


def evolve_twins(psi0: WaveFunction, params1: SimParams, params2: SimParams,
                 observers: Iterable[TwinObserver] = (), n_kicks: int | None = None,
                 leaks: tuple[LeakMonitor, LeakMonitor] | None = None) -> tuple[WaveFunction, WaveFunction]:
    """Evolve one initial state under two parameter sets in lockstep.

    Observers receive ``(kick, psi1, psi2)``.  The two evolutions share nothing
    but the initial state; lockstep iteration only avoids storing histories.
    """
    if params1.grid != params2.grid or psi0.grid != params1.grid:
        raise ShapeError("twin evolutions must share one grid")
    observers = list(observers)
    n = params1.n_kicks if n_kicks is None else int(n_kicks)
    own = leaks is None
    mon1, mon2 = (LeakMonitor(label="H1"), LeakMonitor(label="H2")) if own else leaks
    c1 = KickPotentialCache(params1.grid, params1.K, params1.tau)
    c2 = KickPotentialCache(params2.grid, params2.K, params2.tau)
    a1 = np.array(psi0.amps)
    a2 = np.array(psi0.amps)
    grid = params1.grid
    for kick in range(1, n + 1):
        a1 = c1.step(a1, params1.beta)
        a2 = c2.step(a2, params2.beta)
        mon1.check(kick, a1)
        mon2.check(kick, a2)
        if observers:
            s1, s2 = WaveFunction(grid, a1), WaveFunction(grid, a2)
            for obs in observers:
                obs(kick, s1, s2)
    if own:
        mon1.warn()
        mon2.warn()
    if n == 0:
        return psi0, psi0
    return WaveFunction(grid, a1), WaveFunction(grid, a2)
