"""Periodograms of per-kick series and band-restricted peak extraction.

Frequencies are in cycles per kick.  Magnitudes are scaled so that a cosine of
amplitude ``A`` sitting on a bin produces a peak of height ``A`` regardless of
window, padding or series length.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, NoPeakError, NumericalError, RegimeError, ResolutionError
from .observables import TimeSeries

MIN_LENGTH = 16
WINDOWS = ("rect", "hann")

HIGH_BAND = (0.2, 0.45)
MID_BAND = (0.015, 0.1)
LOW_BAND_TOP = 0.004
WIDTH_BAND = (0.25, 0.45)
# offsets below the fast line searched for the width line
WIDTH_OFFSETS = (0.015, 0.1)
FAST_CLUSTER_HALFWIDTH = 0.005
ROUNDOFF_FLOOR = 1e-12


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    magnitudes: np.ndarray
    window: str = "rect"
    pad: int = 4
    detrend: bool = True
    n_samples: int = 0
    # largest |sample| before detrending; sets the roundoff floor for peaks
    scale: float = 1.0

    @property
    def df(self) -> float:
        return 1.0 / (self.pad * self.n_samples)

    @property
    def bin_width(self) -> float:
        """Natural resolution ``1/n_samples`` of the unpadded transform."""
        return 1.0 / self.n_samples


@dataclass(frozen=True)
class PeakReport:
    band: str
    nu: float
    amplitude: float
    interpolated: bool = True

    @property
    def period(self) -> float:
        return 1.0 / self.nu

    @property
    def angular(self) -> float:
        """Angular frequency in rad/kick."""
        return 2.0 * np.pi * self.nu

    def as_dict(self) -> dict:
        d = asdict(self)
        d["period"] = self.period
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "PeakReport":
        return cls(d["band"], float(d["nu"]), float(d["amplitude"]), bool(d["interpolated"]))


def _values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=float)


def periodogram(series, window: str = "rect", pad: int = 4, detrend: bool = True) -> Spectrum:
    """Magnitude spectrum on ``[0, 0.5]`` cycles/kick.

    Parameters
    ----------
    series : TimeSeries or array_like
        Samples at consecutive kicks.
    window : {"rect", "hann"}
    pad : int
        Zero-padding factor; the frequency step is ``1 / (pad * n)``.
    detrend : bool
        Subtract the mean before windowing.
    """
    x = _values(series)
    n = len(x)
    if n < MIN_LENGTH:
        raise ConfigurationError(f"series too short for a periodogram: {n} < {MIN_LENGTH}")
    if window not in WINDOWS:
        raise ConfigurationError(f"unknown window {window!r}; choose from {WINDOWS}")
    if int(pad) < 1:
        raise ConfigurationError(f"pad must be >= 1, got {pad}")
    pad = int(pad)
    scale = float(np.max(np.abs(x)))
    if detrend:
        x = x - x.mean()
    w = np.hanning(n) if window == "hann" else np.ones(n)
    spec = np.fft.rfft(x * w, pad * n)
    mags = 2.0 * np.abs(spec) / w.sum()
    return Spectrum(np.fft.rfftfreq(pad * n), mags, window, pad, detrend, n, scale)


def parseval_residual(series, detrend: bool = True) -> float:
    """Relative mismatch between time-domain and frequency-domain energy."""
    x = _values(series)
    if detrend:
        x = x - x.mean()
    energy = float(np.sum(x ** 2))
    spec_energy = float(np.sum(np.abs(np.fft.fft(x)) ** 2) / len(x))
    return abs(energy - spec_energy) / max(energy, np.finfo(float).tiny)


def _band_indices(spec: Spectrum, band) -> np.ndarray:
    lo, hi = band
    if not 0.0 <= lo < hi <= 0.5:
        raise ConfigurationError(f"band {band} must satisfy 0 <= lo < hi <= 0.5")
    if hi - lo < 3.0 * spec.bin_width:
        raise ResolutionError(f"band {band} is narrower than 3 bins of width {spec.bin_width:.3g}")
    return np.nonzero((spec.frequencies >= lo) & (spec.frequencies <= hi))[0]


def band_max(spec: Spectrum, band) -> float:
    """Largest magnitude in the band, peak or not."""
    idx = _band_indices(spec, band)
    return float(spec.magnitudes[idx].max()) if idx.size else 0.0


def find_band_peak(spec: Spectrum, band, label: str = "", cluster_halfwidth: float | None = None) -> PeakReport:
    """Strongest local maximum strictly inside ``band``.

    The location is refined by three-point quadratic interpolation.  With
    ``cluster_halfwidth`` the location is instead the power-weighted centroid
    of the bins within that distance of the maximum, which averages over a
    line split into closely spaced sidebands.

    Raises
    ------
    ResolutionError
        Band narrower than three natural bins.
    NoPeakError
        No bin inside the band exceeds both neighbours by more than roundoff.
    """
    idx = _band_indices(spec, band)
    s = spec.magnitudes
    idx = idx[(idx > 0) & (idx < len(s) - 1)]
    floor = ROUNDOFF_FLOOR * spec.scale
    inner = idx[(s[idx] > s[idx - 1]) & (s[idx] >= s[idx + 1]) & (s[idx] > floor)]
    if inner.size == 0:
        raise NoPeakError(f"no local maximum inside band {band}")
    i = int(inner[np.argmax(s[inner])])
    a, b, c = s[i - 1], s[i], s[i + 1]
    denom = a - 2.0 * b + c
    delta = 0.5 * (a - c) / denom if denom != 0 else 0.0
    nu = spec.frequencies[i] + delta * spec.df
    amp = b - 0.25 * (a - c) * delta
    if cluster_halfwidth:
        lo, hi = band
        f = spec.frequencies
        sel = (np.abs(f - f[i]) <= cluster_halfwidth) & (f >= lo) & (f <= hi)
        power = s[sel] ** 2
        nu = float(np.sum(f[sel] * power) / np.sum(power))
    if not band[0] < nu < band[1]:
        raise NoPeakError(f"interpolated peak {nu:.6g} falls outside band {band}")
    return PeakReport(label, float(nu), float(amp), True)


@dataclass
class PeriodReport:
    """Outcome of :func:`extract_periods`; missing reports have an entry in ``errors``."""

    T1: PeakReport | None
    T2: PeakReport | None
    T3: PeakReport | None
    mid_amplitude: float
    errors: dict = field(default_factory=dict)
    bands: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "T1": None if self.T1 is None else self.T1.as_dict(),
            "T2": None if self.T2 is None else self.T2.as_dict(),
            "T3": None if self.T3 is None else self.T3.as_dict(),
            "mid_amplitude": self.mid_amplitude,
            "errors": dict(self.errors),
            "bands": {k: list(v) for k, v in self.bands.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PeriodReport":
        def peak(v):
            return None if v is None else PeakReport.from_dict(v)
        return cls(peak(d["T1"]), peak(d["T2"]), peak(d["T3"]), float(d["mid_amplitude"]),
                   dict(d.get("errors", {})), {k: tuple(v) for k, v in d.get("bands", {}).items()})


def default_bands(n_kicks: int) -> dict[str, tuple[float, float]]:
    return {"high": HIGH_BAND, "mid": MID_BAND, "low": (3.0 / n_kicks, LOW_BAND_TOP)}


def extract_periods(series, n_kicks: int | None = None, bands: Mapping | None = None,
                    window: str = "hann", pad: int = 4,
                    cluster_halfwidth: float | None = FAST_CLUSTER_HALFWIDTH) -> PeriodReport:
    """Fast, intermediate and slow periods of a fidelity series.

    Each band is analysed independently; failures are collected in
    ``errors`` keyed by band name instead of being raised.  A missing mid-band
    peak is a legitimate outcome for non-interacting runs.
    """
    values = _values(series)
    n = len(values) if n_kicks is None else int(n_kicks)
    b = default_bands(n)
    if bands:
        b.update({k: tuple(v) for k, v in bands.items()})
    spec = periodogram(values, window=window, pad=pad)
    errors = {}
    reports = {}
    for name, key, extra in (("high", "T1", cluster_halfwidth), ("mid", "T2", None), ("low", "T3", None)):
        try:
            if name == "low" and n < 1024:
                raise ResolutionError(f"{n} kicks cannot resolve the slow period (need >= 1024)")
            reports[key] = find_band_peak(spec, b[name], name, cluster_halfwidth=extra)
        except (NumericalError, ConfigurationError) as exc:
            reports[key] = None
            errors[name] = f"{type(exc).__name__}: {exc}"
    try:
        mid_amp = band_max(spec, b["mid"])
    except (NumericalError, ConfigurationError):
        mid_amp = 0.0
    return PeriodReport(reports["T1"], reports["T2"], reports["T3"], mid_amp, errors, b)


def width_frequency(width_series, nu_fast: float | None = None, window: str = "hann",
                    pad: int = 4, flat_tol: float = 1e-12) -> PeakReport:
    """Breathing line of the width series.

    The width spectrum is dominated by ``2 * nu_fast`` folded back near the
    fast fidelity line; the breathing line sits just below it.  The search band
    is ``[nu_fast - 0.1, nu_fast - 0.015]`` intersected with ``[0.25, 0.45]``.
    ``nu_fast`` defaults to the strongest width line in ``[0.25, 0.45]``.

    Raises
    ------
    NoPeakError
        Flat series or no line in the search band.
    """
    values = _values(width_series)
    if np.std(values) <= flat_tol * max(1.0, abs(float(np.mean(values)))):
        raise NoPeakError("width series is flat")
    spec = periodogram(values, window=window, pad=pad)
    if nu_fast is None:
        nu_fast = find_band_peak(spec, WIDTH_BAND, "width").nu
    lo = max(WIDTH_BAND[0], nu_fast - WIDTH_OFFSETS[1])
    hi = min(WIDTH_BAND[1], nu_fast - WIDTH_OFFSETS[0])
    if hi <= lo:
        raise NoPeakError(f"empty width search band below nu_fast={nu_fast:.4g}")
    return find_band_peak(spec, (lo, hi), "width")


def predict_T2(omega: float, Omega_width: float) -> float:
    """``2 pi / (2 omega - Omega_width)`` in kicks.

    Raises
    ------
    RegimeError
        If ``2 omega <= Omega_width``.
    """
    d = 2.0 * omega - Omega_width
    if d <= 0:
        raise RegimeError(f"2*omega - Omega_width = {d:.6g} <= 0")
    return 2.0 * np.pi / d


def write_spectrum_csv(path, spec: Spectrum, manifest: str | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if manifest is not None:
            fh.write(f"# manifest: {manifest}\n")
        fh.write("nu,magnitude\n")
        for f, m in zip(spec.frequencies, spec.magnitudes):
            fh.write(f"{f:.17g},{m:.17g}\n")
    return path
