"""Classical kicked map, its linearization at the origin and phase portraits.

The map is

    p' = p - K x exp(-x**2 / 2)
    x' = x + p'

and the origin is an elliptic fixed point for ``0 < K < 4``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import RegimeError


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float

    def __iter__(self):
        yield self.x
        yield self.p

    def distance(self, other: "PhasePoint") -> float:
        return float(np.hypot(self.x - other.x, self.p - other.p))


@dataclass(frozen=True)
class Orbit:
    """Iterates of one seed; ``xs[0], ps[0]`` is the seed itself."""

    initial: PhasePoint
    xs: np.ndarray
    ps: np.ndarray
    orbit_id: int = 0

    def __len__(self) -> int:
        return len(self.xs)

    def __getitem__(self, n: int) -> PhasePoint:
        return PhasePoint(float(self.xs[n]), float(self.ps[n]))

    @property
    def points(self) -> list[PhasePoint]:
        return [PhasePoint(float(x), float(p)) for x, p in zip(self.xs, self.ps)]


def kick_force(x, K: float):
    """Momentum change ``-K x exp(-x^2/2)`` delivered by one kick."""
    return -K * x * np.exp(-0.5 * np.square(x))


def map_step(pt: PhasePoint, K: float) -> PhasePoint:
    p = pt.p + float(kick_force(pt.x, K))
    return PhasePoint(pt.x + p, p)


def iterate(pt: PhasePoint, K: float, n: int, orbit_id: int = 0) -> Orbit:
    """Apply :func:`map_step` ``n`` times and record every point."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    xs = np.empty(n + 1)
    ps = np.empty(n + 1)
    x, p = float(pt.x), float(pt.p)
    xs[0], ps[0] = x, p
    for i in range(1, n + 1):
        p = p - K * x * np.exp(-0.5 * x * x)
        x = x + p
        xs[i], ps[i] = x, p
    return Orbit(PhasePoint(float(pt.x), float(pt.p)), xs, ps, orbit_id)


def tangent_matrix(K: float) -> np.ndarray:
    """Jacobian of the map at the origin."""
    return np.array([[1.0 - K, 1.0], [-K, 1.0]])


def jacobian(pt: PhasePoint, K: float) -> np.ndarray:
    """Jacobian ``d(x', p') / d(x, p)`` at an arbitrary point."""
    g = np.exp(-0.5 * pt.x ** 2)
    dp_dx = -K * g * (1.0 - pt.x ** 2)
    return np.array([[1.0 + dp_dx, 1.0], [dp_dx, 1.0]])


def tangent_eigen(K: float) -> tuple[tuple[complex, complex], float]:
    """Eigenvalues ``exp(+-i omega)`` of the tangent map and the angle ``omega``.

    Raises
    ------
    RegimeError
        If ``K`` is outside the elliptic range ``(0, 4)``.
    """
    if not 0.0 < K < 4.0:
        raise RegimeError(f"origin is elliptic only for 0 < K < 4, got K={K}")
    re = (2.0 - K) / 2.0
    im = np.sqrt(K * (4.0 - K)) / 2.0
    omega = float(np.arctan2(im, re))
    return (complex(re, im), complex(re, -im)), omega


def rotation_frequency(K: float) -> float:
    """Angular velocity (rad/kick) of orbits near the origin."""
    return tangent_eigen(K)[1]


def delta_omega(K1: float, K2: float) -> float:
    """``omega(K1) - omega(K2)``."""
    return rotation_frequency(K1) - rotation_frequency(K2)


def default_seeds(n: int = 14, spacing: float = 0.1) -> list[PhasePoint]:
    return [PhasePoint(spacing * j, 0.0) for j in range(1, n + 1)]


def phase_portrait(K: float, seeds: Sequence[PhasePoint] | None = None, n: int = 3000) -> list[Orbit]:
    """One orbit per seed, tagged with the seed's index."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if seeds is None:
        seeds = default_seeds()
    return [iterate(s, K, n, orbit_id=i) for i, s in enumerate(seeds)]


def write_portrait_csv(path, orbits: Iterable[Orbit], manifest: str | None = None) -> Path:
    """Write ``orbit_id,step,x,p`` rows."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if manifest is not None:
            fh.write(f"# manifest: {manifest}\n")
        fh.write("orbit_id,step,x,p\n")
        for orb in orbits:
            for step, (x, p) in enumerate(zip(orb.xs, orb.ps)):
                fh.write(f"{orb.orbit_id},{step},{x:.17g},{p:.17g}\n")
    return path
