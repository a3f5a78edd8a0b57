"""Command-line interface.

Exit status is 0 on success, 2 for configuration errors and 3 for numerical or
regime errors (including spectral bands that could not be resolved).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import OscModelParams, fidelity_interacting, s_sum_expanded, summed_widths, wigner_correlation_analytic
from .classical import default_seeds, phase_portrait, write_portrait_csv
from .errors import ConfigurationError, KickfidError
from .experiments import (
    FIGURES,
    MANIFEST_NAME,
    ExperimentConfig,
    RunManifest,
    load_config,
    reproduce,
    run_fidelity_experiment,
    run_g_correlation,
    run_wigner_sequence,
    sweep_beta,
    sweep_x0,
)
from .grid import save_snapshot
from .io import read_series, write_rows
from .propagator import LeakMonitor, evolve
from .spectral import extract_periods, periodogram, write_spectrum_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("kickfid")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_sim_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("simulation")
    g.add_argument("--config", help="INI file; the section named by --scenario overrides [DEFAULT]")
    g.add_argument("--scenario", help="section of the config file to use")
    g.add_argument("--K1", "--K", dest="K1", type=float)
    g.add_argument("--K2", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--x0", type=float)
    g.add_argument("--p0", type=float)
    g.add_argument("--kicks", dest="n_kicks", type=int)
    g.add_argument("--grid-n", dest="grid_n", type=int)
    g.add_argument("--grid-xmax", dest="grid_xmax", type=float)
    g.add_argument("--window", choices=("rect", "hann"))
    g.add_argument("--pad", type=int)
    g.add_argument("--out", default="out", help="output directory (default: %(default)s)")


_OVERRIDES = ("K1", "K2", "beta", "tau", "x0", "p0", "n_kicks", "grid_n", "grid_xmax", "window", "pad")


def _config(args, scenario: str, **extra) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config, args.scenario)
    else:
        cfg = ExperimentConfig(scenario=args.scenario or scenario)
    overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
    overrides.update(extra)
    return cfg.updated(**overrides)


def _report(manifest: RunManifest, out) -> int:
    print(json.dumps(manifest.peaks, indent=2, sort_keys=True, default=str))
    if out is not None:
        print(f"wrote {Path(out) / MANIFEST_NAME}")
    if manifest.errors:
        for k, v in sorted(manifest.errors.items()):
            log.error("%s: %s", k, v)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_portrait(args) -> int:
    seeds = default_seeds(args.n_seeds, args.spacing)
    orbits = phase_portrait(args.K, seeds, args.iterations)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(scenario="portrait", K1=args.K)
    manifest = RunManifest("portrait", cfg.to_dict(), cfg.derived(),
                           {"n_orbits": len(orbits), "iterations": args.iterations}, outputs=["portrait.csv"])
    write_portrait_csv(out / "portrait.csv", orbits, MANIFEST_NAME)
    manifest.save(out)
    print(f"wrote {out / 'portrait.csv'}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _config(args, "evolve")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mon = LeakMonitor(label="H1")
    final = evolve(cfg.initial_state(), cfg.params(1), leaks=mon)
    save_snapshot(out / "final_state.csv", final)
    manifest = RunManifest(cfg.scenario, cfg.to_dict(), cfg.derived(),
                           {"norm": final.norm(), "mean_x": final.mean_x(), "mean_p": final.mean_p(cfg.tau)},
                           [mon.as_dict()], outputs=["final_state.csv"])
    manifest.save(out)
    return _report(manifest, out)


def cmd_fidelity(args) -> int:
    cfg = _config(args, "fidelity")
    return _report(run_fidelity_experiment(cfg, args.out), args.out)


def cmd_spectrum(args) -> int:
    series = read_series(args.input)
    window = args.window or "hann"
    spec = periodogram(series, window=window, pad=args.pad)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = extract_periods(series, window=window, pad=args.pad)
    write_spectrum_csv(out / "spectrum.csv", spec, MANIFEST_NAME)
    manifest = RunManifest("spectrum", {"input": str(args.input), "window": window, "pad": args.pad},
                           peaks={"periods": report.as_dict()},
                           errors={k: v for k, v in report.errors.items() if k != "mid"},
                           outputs=["spectrum.csv"])
    manifest.save(out)
    return _report(manifest, out)


def cmd_wigner(args) -> int:
    kicks = args.at_kick
    cfg = _config(args, "wigner")
    if kicks and args.n_kicks is None:
        cfg = cfg.updated(n_kicks=max(kicks))
    if args.leak_tol is not None:
        cfg = cfg.updated(wigner_leak_tol=args.leak_tol)
    return _report(run_wigner_sequence(cfg, kicks, args.out), args.out)


def cmd_gcorr(args) -> int:
    cfg = _config(args, "gcorr")
    return _report(run_g_correlation(cfg, args.delta_n, args.out), args.out)


def cmd_sweep_beta(args) -> int:
    cfg = _config(args, "sweep-beta", betas=args.betas)
    rows, manifest = sweep_beta(cfg, args.out)
    return _report(manifest, args.out)


def cmd_sweep_x0(args) -> int:
    cfg = _config(args, "sweep-x0", x0s=args.x0s)
    rows, manifest = sweep_x0(cfg, args.out)
    return _report(manifest, args.out)


def cmd_analytic(args) -> int:
    params = OscModelParams(
        omega1=args.omega1, omega2=args.omega2, rho=args.rho, hbar_eff=args.tau,
        gamma_x=args.gamma_x, gamma_p=args.gamma_p, Omega1=args.Omega, Omega2=args.Omega,
        phi_x=args.phi_x, phi_p=args.phi_p,
    )
    t = np.arange(args.t_max + 1, dtype=float)
    sx, sp = summed_widths(t, params)
    f_exact = fidelity_interacting(t, params)
    f_exp = params.hbar_eff / np.sqrt(sx * sp) * np.exp(-0.5 * s_sum_expanded(t, params, args.a7_literal))
    g = wigner_correlation_analytic(t, args.delta_t, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "analytic.csv", ("kick", "F_exact", "F_expanded", "G"),
               zip(t.astype(int).tolist(), f_exact, f_exp, g), MANIFEST_NAME)
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    RunManifest("analytic", cfg, outputs=["analytic.csv"]).save(out)
    print(f"wrote {out / 'analytic.csv'}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg = _config(args, args.figure)
    out = Path(args.out) / args.figure if args.nest else Path(args.out)
    return _report(reproduce(args.figure, out, cfg), out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kickfid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("portrait", help="classical phase portrait CSV")
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--n-seeds", type=int, default=14)
    p.add_argument("--spacing", type=float, default=0.1)
    p.add_argument("--iterations", type=int, default=3000)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("evolve", help="evolve one state and save the final snapshot")
    _add_sim_args(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("fidelity", help="twin fidelity run with period extraction")
    _add_sim_args(p)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("spectrum", help="periodogram and periods of a kick,value CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--bands", default="default", choices=("default",))
    p.add_argument("--window", choices=("rect", "hann"))
    p.add_argument("--pad", type=int, default=4)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("wigner", help="Wigner snapshots at selected kicks")
    _add_sim_args(p)
    p.add_argument("--at-kick", type=_ints, default=None, help="comma-separated kicks")
    p.add_argument("--leak-tol", type=float, default=None)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("gcorr", help="lagged Wigner correlation G(n)")
    _add_sim_args(p)
    p.add_argument("--delta-n", type=int, default=1)
    p.set_defaults(func=cmd_gcorr)

    p = sub.add_parser("sweep-beta", help="periods versus interaction strength")
    _add_sim_args(p)
    p.add_argument("--betas", type=_floats, default=None)
    p.set_defaults(func=cmd_sweep_beta)

    p = sub.add_parser("sweep-x0", help="periods versus initial position")
    _add_sim_args(p)
    p.add_argument("--x0s", type=_floats, default=None)
    p.set_defaults(func=cmd_sweep_x0)

    p = sub.add_parser("analytic", help="closed-form oscillator model")
    p.add_argument("--omega1", type=float, default=1.047198)
    p.add_argument("--omega2", type=float, default=1.052973)
    p.add_argument("--rho", type=float, default=0.18)
    p.add_argument("--gamma-x", type=float, default=0.0)
    p.add_argument("--gamma-p", type=float, default=0.0)
    p.add_argument("--Omega", type=float, default=1.94)
    p.add_argument("--phi-x", type=float, default=0.0)
    p.add_argument("--phi-p", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--t-max", type=int, default=2000)
    p.add_argument("--delta-t", type=float, default=1.0)
    p.add_argument("--a7-literal", action="store_true", help="time-independent reading of the A7 term")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("reproduce", help="regenerate the data behind one figure")
    p.add_argument("figure", choices=FIGURES)
    _add_sim_args(p)
    p.add_argument("--no-nest", dest="nest", action="store_false",
                   help="write directly into --out instead of --out/<figure>")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except KickfidError as exc:
        log.error("numerical error: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
