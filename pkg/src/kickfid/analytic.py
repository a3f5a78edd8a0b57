"""Harmonic-oscillator model of the fidelity and of the lagged Wigner correlation.

Each evolved state is modelled as a Gaussian Wigner function riding on a
harmonic trajectory ``x_i(t) = rho cos(omega_i t)``,
``p_i(t) = -m rho omega_i sin(omega_i t)``.  Interactions enter only through
breathing widths ``sigma^2 + gamma cos(Omega_i t + phi)``.  For two normalized
Gaussians

    2 pi tau * int W1 W2 = tau / sqrt(Sx Sp) * exp(-(s_x + s_p) / 2),

with ``Sx = sigma_x1^2 + sigma_x2^2``, ``s_x = (x1 - x2)^2 / Sx`` and likewise
for ``p``.  This closed form is the oracle; :func:`s_sum_expanded` is its exact
first-order expansion in the breathing amplitudes, grouped by frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import RegimeError

VALIDITY_LIMIT = 0.2


@dataclass(frozen=True)
class OscModelParams:
    """Parameters of the two-oscillator model.

    ``sigma_x2`` and ``sigma_p2`` are the common unperturbed squared widths of
    the interacting model; when omitted they are the coherent-state values for
    the mean frequency, ``tau/(2 m omega)`` and ``m tau omega / 2``.
    """

    omega1: float
    omega2: float
    rho: float
    hbar_eff: float = 0.01
    m: float = 1.0
    gamma_x: float = 0.0
    gamma_p: float = 0.0
    Omega1: float = 0.0
    Omega2: float = 0.0
    phi_x: float = 0.0
    phi_p: float = 0.0
    sigma_x2: float | None = None
    sigma_p2: float | None = None

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise RegimeError("oscillator frequencies must be positive")
        if not self.hbar_eff > 0 or not self.m > 0:
            raise RegimeError("hbar_eff and m must be positive")
        w = 0.5 * (self.omega1 + self.omega2)
        if self.sigma_x2 is None:
            object.__setattr__(self, "sigma_x2", self.hbar_eff / (2.0 * self.m * w))
        if self.sigma_p2 is None:
            object.__setattr__(self, "sigma_p2", self.m * self.hbar_eff * w / 2.0)
        floor = (self.hbar_eff / 2.0) ** 2
        if self.sigma_x2 * self.sigma_p2 < floor - 1e-12:
            raise RegimeError("widths violate the uncertainty floor")
        if abs(self.eps_x) > VALIDITY_LIMIT or abs(self.eps_p) > VALIDITY_LIMIT:
            raise RegimeError(
                f"breathing amplitude outside the expansion domain: "
                f"|gamma/2sigma^2| = ({abs(self.eps_x):.3g}, {abs(self.eps_p):.3g}) > {VALIDITY_LIMIT}"
            )

    @property
    def eps_x(self) -> float:
        return self.gamma_x / (2.0 * self.sigma_x2)

    @property
    def eps_p(self) -> float:
        return self.gamma_p / (2.0 * self.sigma_p2)

    @property
    def omega(self) -> float:
        return 0.5 * (self.omega1 + self.omega2)

    @property
    def Omega(self) -> float:
        return 0.5 * (self.Omega1 + self.Omega2)

    def with_gamma_scale(self, factor: float) -> "OscModelParams":
        return replace(self, gamma_x=self.gamma_x * factor, gamma_p=self.gamma_p * factor)


def coherent_widths(omega: float, tau: float, m: float = 1.0) -> tuple[float, float]:
    """Squared widths ``(tau/(2 m omega), m tau omega/2)`` of a coherent state."""
    return tau / (2.0 * m * omega), m * tau * omega / 2.0


def trajectory(t, omega: float, rho: float, m: float = 1.0):
    t = np.asarray(t, dtype=float)
    return rho * np.cos(omega * t), -m * rho * omega * np.sin(omega * t)


def gaussian_overlap(dx, dp, sx, sp, tau):
    """``2 pi tau int W1 W2`` for normalized Gaussians with summed variances ``sx, sp``."""
    return tau / np.sqrt(sx * sp) * np.exp(-0.5 * (dx ** 2 / sx + dp ** 2 / sp))


def fidelity_free(t, params: OscModelParams):
    """Fidelity of the two free oscillators, each in its own coherent state.

    Equals 1 for ``omega1 == omega2``; at ``t = 0`` it is the width-mismatch
    overlap ``tau / sqrt(Sx Sp)``.
    """
    sx1, sp1 = coherent_widths(params.omega1, params.hbar_eff, params.m)
    sx2, sp2 = coherent_widths(params.omega2, params.hbar_eff, params.m)
    x1, p1 = trajectory(t, params.omega1, params.rho, params.m)
    x2, p2 = trajectory(t, params.omega2, params.rho, params.m)
    return gaussian_overlap(x1 - x2, p1 - p2, sx1 + sx2, sp1 + sp2, params.hbar_eff)


def summed_widths(t, params: OscModelParams):
    """``(Sx, Sp)`` with breathing widths for both oscillators."""
    t = np.asarray(t, dtype=float)
    cx = np.cos(params.Omega1 * t + params.phi_x) + np.cos(params.Omega2 * t + params.phi_x)
    cp = np.cos(params.Omega1 * t + params.phi_p) + np.cos(params.Omega2 * t + params.phi_p)
    return 2.0 * params.sigma_x2 + params.gamma_x * cx, 2.0 * params.sigma_p2 + params.gamma_p * cp


def s_terms_exact(t, params: OscModelParams):
    """``(s_x, s_p)`` with breathing widths, no expansion.

    The momentum term uses the trajectory difference
    ``m rho (omega1 sin omega1 t - omega2 sin omega2 t)``.
    """
    x1, p1 = trajectory(t, params.omega1, params.rho, params.m)
    x2, p2 = trajectory(t, params.omega2, params.rho, params.m)
    sx, sp = summed_widths(t, params)
    return (x1 - x2) ** 2 / sx, (p1 - p2) ** 2 / sp


def fidelity_interacting(t, params: OscModelParams):
    """Closed-form model fidelity with breathing widths."""
    s_x, s_p = s_terms_exact(t, params)
    sx, sp = summed_widths(t, params)
    return params.hbar_eff / np.sqrt(sx * sp) * np.exp(-0.5 * (s_x + s_p))


@dataclass(frozen=True)
class CosTerm:
    """``coef * cos(freq * t + phase)`` belonging to family ``A1``..``A8``."""

    family: str
    coef: float
    freq: float
    phase: float

    def __call__(self, t):
        return self.coef * np.cos(self.freq * np.asarray(t, dtype=float) + self.phase)


def _products(terms: list[tuple[float, float, float]], eps: float, Om1: float, Om2: float,
              phi: float, families: Callable[[int], tuple[str, str]]) -> list[CosTerm]:
    """First-order correction ``-eps * D * (cos(Om1 t + phi) + cos(Om2 t + phi))``."""
    out = []
    for idx, (c, f, ph) in enumerate(terms):
        diff_fam, sum_fam = families(idx)
        for Om in (Om1, Om2):
            a = -eps * c / 2.0
            out.append(CosTerm(diff_fam, a, Om - f, phi - ph))
            out.append(CosTerm(sum_fam, a, Om + f, phi + ph))
    return out


def expansion_terms(params: OscModelParams) -> list[CosTerm]:
    """Every cosine in the first-order expansion of ``s_x + s_p``.

    Families group terms by frequency: A1 constant, A2 ``delta omega``, A3
    ``2 omega_i`` and ``omega_s``, A4 ``Omega``, A5 ``Omega - delta omega``,
    A6 ``Omega + delta omega``, A7 ``omega_s - Omega`` (and ``2 omega_i - Omega``),
    A8 ``omega_s + Omega`` (and ``2 omega_i + Omega``).
    """
    w1, w2 = params.omega1, params.omega2
    ax = params.rho ** 2 / (2.0 * params.sigma_x2)
    ap = params.m ** 2 * params.rho ** 2 / (2.0 * params.sigma_p2)
    dw = w1 - w2
    ws = w1 + w2
    # zero-order pieces of each s as (coef, freq, phase)
    dx_terms = [(ax, 0.0, 0.0), (-ax, dw, 0.0),
                (ax / 2, 2 * w1, 0.0), (ax / 2, 2 * w2, 0.0), (-ax, ws, 0.0)]
    dp_terms = [(ap * (w1 ** 2 + w2 ** 2) / 2, 0.0, 0.0), (-ap * w1 * w2, dw, 0.0),
                (-ap * w1 ** 2 / 2, 2 * w1, 0.0), (-ap * w2 ** 2 / 2, 2 * w2, 0.0),
                (ap * w1 * w2, ws, 0.0)]
    zero_fam = ["A1", "A2", "A3", "A3", "A3"]
    first_fam = [("A4", "A4"), ("A5", "A6"), ("A7", "A8"), ("A7", "A8"), ("A7", "A8")]
    terms = []
    for d in (dx_terms, dp_terms):
        terms += [CosTerm(zero_fam[i], c, f, ph) for i, (c, f, ph) in enumerate(d)]
    terms += _products(dx_terms, params.eps_x, params.Omega1, params.Omega2, params.phi_x,
                       lambda i: first_fam[i])
    terms += _products(dp_terms, params.eps_p, params.Omega1, params.Omega2, params.phi_p,
                       lambda i: first_fam[i])
    return terms


def a_terms(t, params: OscModelParams, a7_literal: bool = False) -> dict[str, np.ndarray]:
    """Family sums ``A1``..``A8`` of the first-order expansion at times ``t``.

    With ``a7_literal=True`` the A7 family is replaced by the time-independent
    reading ``rho^2 m^2 gamma_p omega^2 / (2 sigma_p^4) cos(Delta_omega - phi_p)``.
    """
    t = np.asarray(t, dtype=float)
    out = {f"A{i}": np.zeros_like(t) for i in range(1, 9)}
    for term in expansion_terms(params):
        out[term.family] = out[term.family] + term(t)
    if a7_literal:
        w = params.omega
        big_dw = params.omega1 + params.omega2 - params.Omega
        coef = params.rho ** 2 * params.m ** 2 * params.gamma_p * w ** 2 / (2.0 * params.sigma_p2 ** 2)
        out["A7"] = np.full_like(t, coef * np.cos(big_dw - params.phi_p))
    return out


def s_sum_expanded(t, params: OscModelParams, a7_literal: bool = False):
    """First-order expansion of ``s_x + s_p`` in ``gamma / (2 sigma^2)``."""
    return sum(a_terms(t, params, a7_literal).values())


def predicted_frequencies(params: OscModelParams) -> dict[str, float]:
    """``omega_s``, ``delta_omega``, ``Delta_omega`` and the periods ``T1, T2, T3`` in kicks.

    ``Omega`` is the mean of ``Omega1`` and ``Omega2``.  ``T3`` is infinite
    when the two frequencies coincide.

    Raises
    ------
    RegimeError
        If ``Delta_omega = omega_s - Omega <= 0``.
    """
    ws = params.omega1 + params.omega2
    dw = params.omega1 - params.omega2
    big = ws - params.Omega
    if big <= 0:
        raise RegimeError(f"Delta_omega = {big:.6g} <= 0: width frequency reaches 2*omega")
    return {
        "omega_s": ws,
        "delta_omega": dw,
        "Delta_omega": big,
        "T1": 2.0 * np.pi / ws,
        "T2": 2.0 * np.pi / big,
        "T3": np.inf if dw == 0 else 2.0 * np.pi / abs(dw),
    }


def wigner_correlation_analytic(t, delta_t: float, params: OscModelParams):
    """Model ``G = 2 pi tau int W_t W_{t - delta_t}`` for the first oscillator.

    Uses ``omega1`` and ``Omega1`` with breathing widths at both times.  As
    ``delta_t -> 0`` the value tends to ``tau / (2 sqrt(sx sp))``, which is 1
    only while the breathing widths sit on the uncertainty floor.
    """
    if not delta_t > 0:
        raise RegimeError(f"delta_t must be positive, got {delta_t}")
    t = np.asarray(t, dtype=float)
    w, Om = params.omega1, params.Omega1
    xa, pa = trajectory(t, w, params.rho, params.m)
    xb, pb = trajectory(t - delta_t, w, params.rho, params.m)

    def widths(s):
        return (params.sigma_x2 + params.gamma_x * np.cos(Om * s + params.phi_x),
                params.sigma_p2 + params.gamma_p * np.cos(Om * s + params.phi_p))

    sxa, spa = widths(t)
    sxb, spb = widths(t - delta_t)
    return gaussian_overlap(xa - xb, pa - pb, sxa + sxb, spa + spb, params.hbar_eff)
