"""Fidelity, width, Wigner functions and the lagged Wigner correlation G(n).

Overlaps of Wigner functions carry an explicit ``2 pi tau`` factor, so that
``wigner_overlap(W1, W2) == fidelity(psi1, psi2)`` for pure states.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, LeakError, NumericalError, ShapeError
from .grid import WaveFunction, inner_product

FIDELITY_TOL = 1e-9
WIGNER_LEAK_TOL = 1e-6


@dataclass
class TimeSeries:
    """Real samples at consecutive kicks ``start, start+1, ...``."""

    values: np.ndarray
    label: str = ""
    start: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ShapeError("time series must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite values in series {self.label!r}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def kicks(self) -> np.ndarray:
        return self.start + np.arange(len(self.values))


def fidelity(psi1: WaveFunction, psi2: WaveFunction) -> float:
    """``|<psi1|psi2>|^2`` clamped to [0, 1].

    Raises
    ------
    NumericalError
        If the raw value exceeds ``1 + 1e-9`` (unnormalized inputs).
    """
    f = abs(inner_product(psi1, psi2)) ** 2
    if f > 1.0 + FIDELITY_TOL:
        raise NumericalError(f"fidelity {f:.12g} exceeds 1; are the states normalized?")
    return min(f, 1.0)


def _fidelity_amps(a1: np.ndarray, a2: np.ndarray, dx: float) -> float:
    return min(abs(np.vdot(a1, a2) * dx) ** 2, 1.0)


def mean_x(psi: WaveFunction) -> float:
    return psi.mean_x()


def mean_p(psi: WaveFunction, tau: float) -> float:
    return psi.mean_p(tau)


def width(psi: WaveFunction) -> float:
    """Position variance ``<(x - <x>)^2>``."""
    d = psi.density
    norm = np.sum(d)
    x = psi.grid.x
    m = np.sum(x * d) / norm
    return float(np.sum((x - m) ** 2 * d) / norm)


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on ``x`` (rows) and ascending ``p`` (columns)."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    tau: float
    imag_residue: float = 0.0

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def total(self) -> float:
        return float(self.values.sum() * self.dx * self.dp)

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dp

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dx

    def same_grid(self, other: "WignerGrid") -> bool:
        return (self.values.shape == other.values.shape and self.tau == other.tau
                and np.array_equal(self.x, other.x) and np.array_equal(self.p, other.p))

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Means ``(<x>, <p>)`` and the 2x2 phase-space covariance."""
        w = self.values * self.dx * self.dp
        total = w.sum()
        wx = w.sum(axis=1) / total
        wp = w.sum(axis=0) / total
        mx = np.dot(self.x, wx)
        mp = np.dot(self.p, wp)
        vx = np.dot((self.x - mx) ** 2, wx)
        vp = np.dot((self.p - mp) ** 2, wp)
        cxp = (self.x - mx) @ (w / total) @ (self.p - mp)
        return np.array([mx, mp]), np.array([[vx, cxp], [cxp, vp]])

    def covariance_det(self) -> float:
        """Determinant of the phase-space covariance; ``tau^2/4`` for a coherent state."""
        return float(np.linalg.det(self.moments()[1]))


def _upsample2(amps: np.ndarray) -> np.ndarray:
    """Band-limited interpolation onto the half-step grid (length 2N)."""
    n = len(amps)
    spec = np.fft.fft(amps)
    padded = np.zeros(2 * n, dtype=complex)
    half = n // 2
    padded[:half] = spec[:half]
    padded[-half:] = spec[-half:]
    # split the Nyquist bin so the interpolant stays real for real input
    padded[half] = 0.5 * spec[half]
    padded[-half] = 0.5 * spec[half]
    return 2.0 * np.fft.ifft(padded)


def wigner(psi: WaveFunction, tau: float, leak_tol: float = WIGNER_LEAK_TOL,
           chunk: int = 256) -> WignerGrid:
    """Discrete Wigner transform of a pure state.

    ``W(x, p) = (1/(pi tau)) int dxi conj(psi(x+xi)) psi(x-xi) exp(2i p xi / tau)``
    evaluated on the half-step lattice ``xi = m dx / 2`` with ``psi`` taken as
    zero outside the grid.  Momenta are the ``N`` grid values ``tau k`` sorted
    ascending on ``[-pi tau/dx, pi tau/dx)``.

    Raises
    ------
    LeakError
        If the boundary amplitude exceeds ``leak_tol``.
    """
    amp = psi.boundary_amplitude()
    if amp > leak_tol:
        raise LeakError(amp, leak_tol)
    grid = psi.grid
    n = grid.n_points
    dx = grid.dx
    fine = np.concatenate([np.zeros(n, complex), _upsample2(psi.amps), np.zeros(n, complex)])
    m = np.arange(-n, n)
    # exp(2i p xi / tau) with p = tau k_q, xi = m dx/2 only depends on m mod N
    values = np.empty((n, n))
    imag = 0.0
    for lo in range(0, n, chunk):
        rows = np.arange(lo, min(lo + chunk, n))
        centre = n + 2 * rows[:, None]
        corr = np.conj(fine[centre + m]) * fine[centre - m]
        # column r collects every m with m = r (mod N)
        folded = corr[:, :n] + corr[:, n:]
        block = np.fft.fftshift(n * np.fft.ifft(folded, axis=1), axes=1)
        imag = max(imag, float(np.max(np.abs(block.imag))))
        values[rows] = block.real
    values *= dx / (2.0 * np.pi * tau)
    imag *= dx / (2.0 * np.pi * tau)
    p = tau * 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, d=dx))
    return WignerGrid(np.array(grid.x), p, values, tau, imag)


def wigner_overlap(w1: WignerGrid, w2: WignerGrid) -> float:
    """``2 pi tau sum W1 W2 dx dp``."""
    if not w1.same_grid(w2):
        raise ShapeError("Wigner functions live on different grids")
    return float(2.0 * np.pi * w1.tau * np.sum(w1.values * w2.values) * w1.dx * w1.dp)


def g_correlation(states: Sequence[WaveFunction] | Iterable[WaveFunction], delta_n: int,
                  method: str = "braket", tau: float | None = None, start: int = 0,
                  leak_tol: float = WIGNER_LEAK_TOL) -> TimeSeries:
    """Lagged correlation ``G(n) = 2 pi tau sum W_n W_{n - delta_n} dx dp``.

    ``states[i]`` is the state at kick ``start + i``; the result starts at kick
    ``start + delta_n``.  For pure states ``G(n) = |<psi_n|psi_{n-delta_n}>|^2``,
    which ``method="braket"`` uses; ``method="wigner"`` evaluates the
    phase-space integral directly and requires ``tau``.
    """
    if int(delta_n) < 1:
        raise ConfigurationError(f"delta_n must be >= 1, got {delta_n}")
    if method not in ("braket", "wigner"):
        raise ConfigurationError(f"unknown method {method!r}")
    if method == "wigner" and tau is None:
        raise ConfigurationError("method='wigner' needs tau")
    rec = GCorrelationRecorder(delta_n, method=method, tau=tau, leak_tol=leak_tol)
    count = 0
    for i, s in enumerate(states):
        rec(start + i, s)
        count += 1
    if count <= delta_n:
        raise ConfigurationError(f"need more than delta_n={delta_n} states, got {count}")
    return rec.series()


class FidelityRecorder:
    """Twin observer collecting ``F(kick)``."""

    def __init__(self):
        self.kicks: list[int] = []
        self.values: list[float] = []

    def __call__(self, kick: int, psi1: WaveFunction, psi2: WaveFunction):
        self.kicks.append(kick)
        self.values.append(_fidelity_amps(psi1.amps, psi2.amps, psi1.grid.dx))

    def series(self) -> TimeSeries:
        return TimeSeries(np.array(self.values), "fidelity", self.kicks[0] if self.kicks else 1)


class WidthRecorder:
    """Single-state observer collecting the position variance."""

    def __init__(self):
        self.kicks: list[int] = []
        self.values: list[float] = []

    def __call__(self, kick: int, psi: WaveFunction):
        self.kicks.append(kick)
        self.values.append(width(psi))

    def series(self) -> TimeSeries:
        return TimeSeries(np.array(self.values), "width", self.kicks[0] if self.kicks else 1)


class GCorrelationRecorder:
    """Single-state observer holding a ring buffer of ``delta_n + 1`` states."""

    def __init__(self, delta_n: int, method: str = "braket", tau: float | None = None,
                 leak_tol: float = WIGNER_LEAK_TOL):
        if int(delta_n) < 1:
            raise ConfigurationError(f"delta_n must be >= 1, got {delta_n}")
        self.delta_n = int(delta_n)
        self.method = method
        self.tau = tau
        self.leak_tol = leak_tol
        self._buffer: deque = deque(maxlen=self.delta_n + 1)
        self.kicks: list[int] = []
        self.values: list[float] = []

    def _transform(self, psi: WaveFunction):
        if self.method == "wigner":
            return wigner(psi, self.tau, leak_tol=self.leak_tol)
        return psi

    def __call__(self, kick: int, psi: WaveFunction):
        self._buffer.append((kick, self._transform(psi)))
        if len(self._buffer) <= self.delta_n:
            return
        (k_old, old), (k_new, new) = self._buffer[0], self._buffer[-1]
        if self.method == "wigner":
            g = wigner_overlap(new, old)
        else:
            g = _fidelity_amps(new.amps, old.amps, new.grid.dx)
        self.kicks.append(k_new)
        self.values.append(g)

    def series(self) -> TimeSeries:
        start = self.kicks[0] if self.kicks else self.delta_n
        return TimeSeries(np.array(self.values), f"G(dn={self.delta_n})", start)


class SnapshotRecorder:
    """Single-state observer keeping copies of the state at selected kicks."""

    def __init__(self, kicks: Iterable[int]):
        self.wanted = set(int(k) for k in kicks)
        self.states: dict[int, WaveFunction] = {}

    def __call__(self, kick: int, psi: WaveFunction):
        if kick in self.wanted:
            self.states[kick] = psi


class TwinAdapter:
    """Feed one member of a twin evolution to a single-state observer."""

    def __init__(self, observer, which: int = 0):
        self.observer = observer
        self.which = which

    def __call__(self, kick: int, psi1: WaveFunction, psi2: WaveFunction):
        self.observer(kick, psi2 if self.which else psi1)


def write_wigner_csv(path, w: WignerGrid, x_window: float | None = None,
                     p_window: float | None = None, stride: int = 1,
                     manifest: str | None = None) -> Path:
    """Write ``x,p,w`` rows (row-major in x), optionally cropped and strided."""
    xi = np.arange(len(w.x))
    pi = np.arange(len(w.p))
    if x_window is not None:
        xi = xi[np.abs(w.x) <= x_window]
    if p_window is not None:
        pi = pi[np.abs(w.p) <= p_window]
    xi = xi[::stride]
    pi = pi[::stride]
    path = Path(path)
    with path.open("w", newline="") as fh:
        if manifest is not None:
            fh.write(f"# manifest: {manifest}\n")
        fh.write("x,p,w\n")
        for i in xi:
            row = w.values[i]
            xs = f"{w.x[i]:.17g}"
            fh.write("".join(f"{xs},{w.p[j]:.17g},{row[j]:.17g}\n" for j in pi))
    return path
