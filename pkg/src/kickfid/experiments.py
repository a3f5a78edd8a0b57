"""Twin evolutions, parameter sweeps and figure reproductions with persistent outputs.

A run directory holds plot-ready CSV files plus ``manifest.json``; every CSV
names the manifest in its first comment line.  Sweep points run in worker
processes (``KICKFID_WORKERS`` caps the count) and each point writes into its
own subdirectory.
"""

from __future__ import annotations

import configparser
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .classical import default_seeds, delta_omega, phase_portrait, rotation_frequency, write_portrait_csv
from .errors import ConfigurationError, KickfidError, NumericalError
from .grid import SimParams, WaveFunction, make_coherent_state, make_grid
from .io import write_rows, write_series
from .observables import (
    FidelityRecorder,
    GCorrelationRecorder,
    SnapshotRecorder,
    TimeSeries,
    TwinAdapter,
    WidthRecorder,
    wigner,
    write_wigner_csv,
)
from .propagator import LeakMonitor, evolve, evolve_twins
from .spectral import (
    PeriodReport,
    extract_periods,
    find_band_peak,
    periodogram,
    predict_T2,
    width_frequency,
    write_spectrum_csv,
)

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
WORKERS_ENV = "KICKFID_WORKERS"
FIGURES = tuple(f"fig{i}" for i in range(1, 10))


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one scenario.

    The two Hamiltonians of a twin run differ only in ``K1`` versus ``K2``.
    ``omega0`` is the coherent-state frequency; ``None`` means ``omega(K1)``.
    """

    scenario: str = "fidelity"
    K1: float = 1.0
    K2: float = 1.01
    beta: float = 6e-5
    tau: float = 0.01
    x0: float = 0.18
    p0: float = 0.0
    n_kicks: int = 8192
    grid_n: int = 2048
    grid_xmax: float = 8.0
    omega0: float | None = None
    betas: tuple = (1e-5, 2e-5, 3e-5, 4e-5, 5e-5, 6e-5)
    x0s: tuple = (0.14, 0.18, 0.22, 0.26, 0.30)
    p0s: tuple = (0.0,)
    observables: tuple = ("fidelity", "width")
    window: str = "hann"
    pad: int = 4
    high_band: tuple = (0.2, 0.45)
    mid_band: tuple = (0.015, 0.1)
    low_band_top: float = 0.004
    cluster_halfwidth: float = 0.005
    delta_n: int = 1
    wigner_kicks: tuple = (990, 991, 992, 993, 994, 995)
    wigner_leak_tol: float = 1e-3
    wigner_window: float = 1.0
    wigner_stride: int = 4

    def __post_init__(self):
        for name in ("betas", "x0s", "p0s", "observables", "high_band", "mid_band", "wigner_kicks"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if int(self.n_kicks) < 1:
            raise ConfigurationError(f"n_kicks must be >= 1, got {self.n_kicks}")
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        for k in (self.K1, self.K2):
            if not 0 <= k < 4:
                raise ConfigurationError(f"K must lie in [0, 4), got {k}")
        unknown = set(self.observables) - {"fidelity", "width", "gcorr"}
        if unknown:
            raise ConfigurationError(f"unknown observables {sorted(unknown)}")

    # ------------------------------------------------------------------ derived
    def grid(self):
        return make_grid(self.grid_n, self.grid_xmax)

    def params(self, which: int = 1) -> SimParams:
        K = self.K1 if which == 1 else self.K2
        return SimParams(K, self.beta, self.tau, self.x0, self.p0, int(self.n_kicks), self.grid())

    def coherent_omega(self) -> float:
        return self.omega0 if self.omega0 is not None else rotation_frequency(self.K1)

    def initial_state(self) -> WaveFunction:
        return make_coherent_state(self.grid(), self.tau, self.coherent_omega(), self.x0, self.p0)

    def bands(self) -> dict:
        return {"high": self.high_band, "mid": self.mid_band,
                "low": (3.0 / self.n_kicks, self.low_band_top)}

    def derived(self) -> dict:
        out = {"coherent_omega": self.coherent_omega(),
               "sigma_x": float(np.sqrt(self.tau / (2.0 * self.coherent_omega())))}
        try:
            w1, w2 = rotation_frequency(self.K1), rotation_frequency(self.K2)
            out.update(omega1=w1, omega2=w2, delta_omega=w1 - w2, omega_s=w1 + w2,
                       T1_classical=2 * np.pi / (w1 + w2),
                       T3_classical=None if w1 == w2 else 2 * np.pi / abs(w1 - w2))
        except KickfidError:
            pass
        return out

    # ------------------------------------------------------------------ serialization
    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        return cls(**{k: _coerce(k, v) for k, v in d.items()})

    def updated(self, **overrides) -> "ExperimentConfig":
        clean = {k: _coerce(k, v) for k, v in overrides.items() if v is not None}
        return replace(self, **clean)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_INT_TUPLES = {"wigner_kicks"}
_STR_TUPLES = {"observables"}


def _coerce(name: str, value):
    """Convert text (from INI files or CLI flags) into the field's type."""
    if name not in _FIELD_TYPES:
        raise ConfigurationError(f"unknown config key {name!r}")
    typ = str(_FIELD_TYPES[name])
    try:
        if typ == "tuple":
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            if name in _STR_TUPLES:
                return tuple(str(v) for v in value)
            if name in _INT_TUPLES:
                return tuple(int(v) for v in value)
            return tuple(float(v) for v in value)
        if not isinstance(value, str):
            return value
        if typ == "int":
            return int(value)
        if typ.startswith("float | None"):
            return None if value.strip().lower() in ("", "none") else float(value)
        if typ == "float":
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {name}: {value!r}") from exc


def load_config(path, scenario: str | None = None) -> ExperimentConfig:
    """Read an INI file; ``[DEFAULT]`` applies everywhere, ``[scenario]`` overrides it."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigurationError(f"cannot read config file {path}")
    values = dict(parser.defaults())
    if scenario is not None:
        if not parser.has_section(scenario):
            raise ConfigurationError(f"config file has no section [{scenario}]")
        values.update(parser.items(scenario))
        values["scenario"] = scenario
    values = {k.replace("-", "_"): v for k, v in values.items()}
    return ExperimentConfig.from_dict(values)


@dataclass
class RunManifest:
    """Everything needed to interpret a run directory."""

    scenario: str
    config: dict
    derived: dict = field(default_factory=dict)
    peaks: dict = field(default_factory=dict)
    leaks: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION
    software_version: str = __version__

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls.from_dict(json.loads(text))

    def save(self, out_dir) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(self.to_json() + "\n")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        return cls.from_json(path.read_text())


@dataclass
class TwinRun:
    """Series recorded during one twin evolution."""

    fidelity: TimeSeries | None
    width: TimeSeries | None
    gcorr: TimeSeries | None
    leaks: list
    seconds: float


def simulate_twins(config: ExperimentConfig, observables: Iterable[str] | None = None) -> TwinRun:
    """Evolve the initial state under ``K1`` and ``K2`` and record the requested series.

    ``width`` and ``gcorr`` are recorded for the ``K1`` member.
    """
    obs = tuple(config.observables if observables is None else observables)
    t0 = time.perf_counter()
    psi0 = config.initial_state()
    fid = FidelityRecorder() if "fidelity" in obs else None
    wid = WidthRecorder() if "width" in obs else None
    gc = GCorrelationRecorder(config.delta_n) if "gcorr" in obs else None
    observers = [fid] if fid else []
    observers += [TwinAdapter(o) for o in (wid, gc) if o is not None]
    mon = (LeakMonitor(label="H1"), LeakMonitor(label="H2"))
    evolve_twins(psi0, config.params(1), config.params(2), observers, leaks=mon)
    return TwinRun(
        fid.series() if fid else None,
        wid.series() if wid else None,
        gc.series() if gc else None,
        [m.as_dict() for m in mon],
        time.perf_counter() - t0,
    )


def analyse_twin_run(run: TwinRun, config: ExperimentConfig) -> tuple[dict, dict]:
    """Period reports, width line and predicted T2; returns ``(peaks, errors)``."""
    peaks: dict = {}
    errors: dict = {}
    report: PeriodReport | None = None
    if run.fidelity is not None:
        report = extract_periods(run.fidelity, config.n_kicks, bands=config.bands(),
                                 window=config.window, pad=config.pad,
                                 cluster_halfwidth=config.cluster_halfwidth)
        peaks["periods"] = report.as_dict()
        errors.update({f"periods.{k}": v for k, v in report.errors.items() if k != "mid"})
    if run.width is not None:
        nu_fast = report.T1.nu if report is not None and report.T1 is not None else None
        try:
            wline = width_frequency(run.width, nu_fast=nu_fast, window=config.window, pad=config.pad)
            peaks["width"] = wline.as_dict()
            peaks["Omega_width"] = wline.angular
            if report is not None and report.T1 is not None:
                # 2*omega is the measured fast angular frequency
                t2p = predict_T2(np.pi * report.T1.nu, wline.angular)
                peaks["T2_pred"] = t2p
                if report.T2 is not None:
                    peaks["T2_rel_diff"] = abs(t2p - report.T2.period) / report.T2.period
        except (NumericalError, ConfigurationError) as exc:
            errors["width"] = f"{type(exc).__name__}: {exc}"
    if run.gcorr is not None:
        try:
            spec = periodogram(run.gcorr, window=config.window, pad=config.pad)
            peaks["gcorr_mid"] = find_band_peak(spec, config.mid_band, "mid").as_dict()
        except (NumericalError, ConfigurationError) as exc:
            errors["gcorr"] = f"{type(exc).__name__}: {exc}"
    return peaks, errors


def _prepare(out_dir) -> Path | None:
    if out_dir is None:
        return None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_fidelity_experiment(config: ExperimentConfig, out_dir=None) -> RunManifest:
    """Twin run with fidelity, width and spectra; writes CSVs when ``out_dir`` is given.

    Outputs: ``fidelity.csv``, ``width.csv`` (K1 member), ``spectrum.csv``
    (fidelity), ``width_spectrum.csv``, ``gcorr.csv`` if requested, and the
    manifest.  Spectral failures are recorded in ``manifest.errors``.
    """
    t0 = time.perf_counter()
    out = _prepare(out_dir)
    run = simulate_twins(config)
    peaks, errors = analyse_twin_run(run, config)
    manifest = RunManifest(config.scenario, config.to_dict(), config.derived(), peaks,
                           run.leaks, errors)
    if out is not None:
        if run.fidelity is not None:
            write_series(out / "fidelity.csv", run.fidelity, MANIFEST_NAME)
            spec = periodogram(run.fidelity, window=config.window, pad=config.pad)
            write_spectrum_csv(out / "spectrum.csv", spec, MANIFEST_NAME)
            manifest.outputs += ["fidelity.csv", "spectrum.csv"]
        if run.width is not None:
            write_series(out / "width.csv", run.width, MANIFEST_NAME)
            spec = periodogram(run.width, window=config.window, pad=config.pad)
            write_spectrum_csv(out / "width_spectrum.csv", spec, MANIFEST_NAME)
            manifest.outputs += ["width.csv", "width_spectrum.csv"]
        if run.gcorr is not None:
            write_series(out / "gcorr.csv", run.gcorr, MANIFEST_NAME)
            manifest.outputs.append("gcorr.csv")
    manifest.timing = {"evolution_s": run.seconds, "total_s": time.perf_counter() - t0}
    if out is not None:
        manifest.save(out)
    return manifest


# ---------------------------------------------------------------------- sweeps
def worker_count(n_tasks: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    else:
        n = os.cpu_count() or 1
    return max(1, min(n, n_tasks))


def _sweep_point(args) -> dict:
    config, out_dir = args
    try:
        m = run_fidelity_experiment(config, out_dir)
    except Exception as exc:  # a failing point must not abort the sweep
        return {"status": "error", "reason": f"{type(exc).__name__}: {exc}"}
    periods = m.peaks.get("periods", {})

    def period(key):
        rep = periods.get(key)
        return None if rep is None else rep["period"]

    row = {
        "T1": period("T1"), "T2": period("T2"), "T3": period("T3"),
        "amp_T2": periods.get("mid_amplitude"),
        "Omega_width": m.peaks.get("Omega_width"),
        "T2_pred": m.peaks.get("T2_pred"),
        "T2_rel_diff": m.peaks.get("T2_rel_diff"),
        "status": "ok" if m.ok else "partial",
        "reason": "; ".join(f"{k}: {v}" for k, v in sorted(m.errors.items())),
    }
    return row


def _manifest_only(config: ExperimentConfig) -> RunManifest:
    return run_fidelity_experiment(config, None)


def run_many(configs: Sequence[ExperimentConfig]) -> list[RunManifest]:
    """In-memory fidelity experiments for several configs, in order."""
    n = worker_count(len(configs))
    if n == 1:
        return [_manifest_only(c) for c in configs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_manifest_only, configs))


def run_points(configs: Sequence[ExperimentConfig], out_dirs: Sequence | None = None) -> list[dict]:
    """Run fidelity experiments concurrently, preserving order."""
    out_dirs = list(out_dirs) if out_dirs is not None else [None] * len(configs)
    tasks = list(zip(configs, out_dirs))
    n = worker_count(len(tasks))
    if n == 1:
        return [_sweep_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_sweep_point, tasks))


def _sweep(config: ExperimentConfig, axis: str, values: Sequence[float], out_dir,
           columns: Sequence[str], name: str) -> tuple[list[dict], RunManifest]:
    if len(values) < 2:
        raise ConfigurationError(f"a {axis} sweep needs at least two values, got {list(values)}")
    out = _prepare(out_dir)
    t0 = time.perf_counter()
    configs = [config.updated(**{axis: v}, scenario=f"{config.scenario}:{axis}={v:g}") for v in values]
    dirs = [None if out is None else out / f"{axis}_{i:02d}" for i in range(len(values))]
    rows = run_points(configs, dirs)
    for v, row in zip(values, rows):
        row[axis] = v
    manifest = RunManifest(config.scenario, config.to_dict(), config.derived(),
                           {"rows": rows}, [], {})
    failed = [r for r in rows if r["status"] == "error"]
    if failed:
        manifest.errors["points"] = f"{len(failed)} of {len(rows)} points failed"
    if out is not None:
        header = [axis, *columns, "status", "reason"]
        write_rows(out / f"{name}.csv", header, ([r.get(c) for c in header] for r in rows), MANIFEST_NAME)
        manifest.outputs = [f"{name}.csv"] + [f"{d.name}/" for d in dirs]
    manifest.timing = {"total_s": time.perf_counter() - t0}
    if out is not None:
        manifest.save(out)
    return rows, manifest


def sweep_beta(config: ExperimentConfig, out_dir=None) -> tuple[list[dict], RunManifest]:
    """Fidelity periods, mid-band amplitude and the T2 prediction for each ``beta``."""
    cols = ("T1", "T2", "T3", "amp_T2", "Omega_width", "T2_pred", "T2_rel_diff")
    return _sweep(config, "beta", config.betas, out_dir, cols, "sweep_beta")


def sweep_x0(config: ExperimentConfig, out_dir=None) -> tuple[list[dict], RunManifest]:
    """Fidelity periods for each initial position (``p0`` taken from the config)."""
    return _sweep(config, "x0", config.x0s, out_dir, ("T1", "T2", "T3", "amp_T2"), "sweep_x0")


# ---------------------------------------------------------------------- Wigner and G(n)
def run_wigner_sequence(config: ExperimentConfig, kicks: Sequence[int] | None = None,
                        out_dir=None) -> RunManifest:
    """Wigner snapshots of the ``K1`` evolution at the requested kicks.

    The manifest lists the phase-space covariance determinant of each snapshot
    and of the initial state, the localization measure for comparing runs.
    """
    kicks = sorted(set(int(k) for k in (config.wigner_kicks if kicks is None else kicks)))
    if not kicks:
        raise ConfigurationError("no kicks requested")
    if kicks[0] < 0 or kicks[-1] > config.n_kicks:
        raise ConfigurationError(f"kicks must lie in [0, {config.n_kicks}], got {kicks}")
    out = _prepare(out_dir)
    t0 = time.perf_counter()
    psi0 = config.initial_state()
    snaps = SnapshotRecorder(kicks)
    mon = LeakMonitor(label="H1")
    evolve(psi0, config.params(1), [snaps], n_kicks=kicks[-1], leaks=mon)
    if 0 in kicks:
        snaps.states[0] = psi0
    manifest = RunManifest(config.scenario, config.to_dict(), config.derived(), {}, [mon.as_dict()], {})
    dets = {"0": wigner(psi0, config.tau).covariance_det()}
    for k in kicks:
        try:
            w = wigner(snaps.states[k], config.tau, leak_tol=config.wigner_leak_tol)
        except KickfidError as exc:
            manifest.errors[f"kick{k}"] = f"{type(exc).__name__}: {exc}"
            continue
        dets[str(k)] = w.covariance_det()
        if out is not None:
            name = f"wigner_{k:05d}.csv"
            write_wigner_csv(out / name, w, config.wigner_window, config.wigner_window,
                             config.wigner_stride, MANIFEST_NAME)
            manifest.outputs.append(name)
    manifest.peaks = {"covariance_det": dets, "wigner_leak_tol": config.wigner_leak_tol}
    manifest.timing = {"total_s": time.perf_counter() - t0}
    if out is not None:
        manifest.save(out)
    return manifest


def run_g_correlation(config: ExperimentConfig, delta_n: int | None = None, out_dir=None) -> RunManifest:
    """G(n) of the ``K1`` member alongside the twin fidelity, with mid-band comparison."""
    dn = config.delta_n if delta_n is None else int(delta_n)
    if dn < 1:
        raise ConfigurationError(f"delta_n must be >= 1, got {dn}")
    cfg = config.updated(delta_n=dn, observables=("fidelity", "gcorr"))
    manifest = run_fidelity_experiment(cfg, out_dir)
    g = manifest.peaks.get("gcorr_mid")
    f = (manifest.peaks.get("periods") or {}).get("T2")
    if g is not None and f is not None:
        manifest.peaks["nu2_rel_diff"] = abs(g["nu"] - f["nu"]) / f["nu"]
    if out_dir is not None:
        manifest.save(out_dir)
    return manifest


# ---------------------------------------------------------------------- figures
def run_portrait(config: ExperimentConfig, out_dir=None, n: int = 3000) -> RunManifest:
    out = _prepare(out_dir)
    orbits = phase_portrait(config.K1, default_seeds(), n)
    manifest = RunManifest(config.scenario, config.to_dict(), config.derived(),
                           {"n_orbits": len(orbits), "iterations": n})
    if out is not None:
        write_portrait_csv(out / "portrait.csv", orbits, MANIFEST_NAME)
        manifest.outputs.append("portrait.csv")
        manifest.save(out)
    return manifest


def reproduce(figure: str, out_dir, config: ExperimentConfig | None = None) -> RunManifest:
    """Regenerate the data behind one figure into ``out_dir``.

    ``fig1`` phase portrait; ``fig2``/``fig3`` fidelity and its spectrum at the
    default interacting point (``fig3`` adds the non-interacting spectrum);
    ``fig4``/``fig7``/``fig8`` the beta sweep (periods, T2 prediction, mid-band
    amplitude); ``fig5`` the x0 sweep; ``fig6`` width spectra for the two
    launch points; ``fig9`` Wigner snapshots with and without interactions.
    """
    if figure not in FIGURES:
        raise ConfigurationError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    base = (config or ExperimentConfig()).updated(scenario=figure)
    out = _prepare(out_dir)
    t0 = time.perf_counter()
    if figure == "fig1":
        return run_portrait(base, out)
    if figure == "fig2":
        return run_fidelity_experiment(base, out)
    if figure in ("fig4", "fig7", "fig8"):
        return sweep_beta(base, out)[1]
    if figure == "fig5":
        return sweep_x0(base, out)[1]
    if figure == "fig3":
        parts = {"interacting": base, "noninteracting": base.updated(beta=0.0)}
    elif figure == "fig6":
        parts = {"x0_0.18": base, "p0_0.14": base.updated(x0=0.0, p0=0.14)}
    else:
        parts = {"beta_0": base.updated(beta=0.0), "beta_6e-05": base.updated(beta=6e-5)}
    manifest = RunManifest(figure, base.to_dict(), base.derived())
    for name, cfg in parts.items():
        sub = out / name
        if figure == "fig9":
            m = run_wigner_sequence(cfg.updated(scenario=f"{figure}:{name}"), out_dir=sub)
        else:
            m = run_fidelity_experiment(cfg.updated(scenario=f"{figure}:{name}"), sub)
        manifest.peaks[name] = m.peaks
        manifest.errors.update({f"{name}.{k}": v for k, v in m.errors.items()})
        manifest.leaks += m.leaks
        manifest.outputs += [f"{name}/{o}" for o in m.outputs]
    manifest.timing = {"total_s": time.perf_counter() - t0}
    manifest.save(out)
    return manifest
