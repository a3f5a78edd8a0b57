import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kickfid.analytic import (
    OscModelParams,
    a_terms,
    coherent_widths,
    expansion_terms,
    fidelity_free,
    fidelity_interacting,
    predicted_frequencies,
    s_sum_expanded,
    s_terms_exact,
    summed_widths,
    trajectory,
    wigner_correlation_analytic,
)
from kickfid.errors import RegimeError
from kickfid.spectral import find_band_peak, periodogram

TAU = 0.01
W1, W2 = 1.047198, 1.052973


def interacting(scale=1.0, **kw):
    sx, sp = coherent_widths(0.5 * (W1 + W2), TAU)
    base = dict(omega1=W1, omega2=W2, rho=0.18, hbar_eff=TAU,
                gamma_x=0.1 * 2 * sx * scale, gamma_p=0.08 * 2 * sp * scale,
                Omega1=1.93, Omega2=1.95, phi_x=0.4, phi_p=1.3)
    base.update(kw)
    return OscModelParams(**base)


def overlap_quadrature(x1, x2, v1, v2):
    """int g1 g2 dx for normalized Gaussians, by adaptive quadrature."""
    def g(x, m, v):
        return np.exp(-(x - m) ** 2 / (2 * v)) / np.sqrt(2 * np.pi * v)
    s = np.sqrt(v1 + v2)
    lo, hi = min(x1, x2) - 12 * s, max(x1, x2) + 12 * s
    # nearly coincident breakpoints upset the adaptive rule
    points = [x1] if abs(x1 - x2) < 1e-9 * s else sorted([x1, x2])
    val, _ = integrate.quad(lambda x: g(x, x1, v1) * g(x, x2, v2), lo, hi,
                            points=points, epsabs=0, epsrel=1e-13, limit=200)
    return val


def brute_force_fidelity(t, params):
    """2 pi tau int W1 W2 as a product of two 1-D quadratures."""
    sx1, sp1 = coherent_widths(params.omega1, params.hbar_eff)
    sx2, sp2 = coherent_widths(params.omega2, params.hbar_eff)
    x1, p1 = trajectory(t, params.omega1, params.rho)
    x2, p2 = trajectory(t, params.omega2, params.rho)
    return 2 * np.pi * params.hbar_eff * overlap_quadrature(x1, x2, sx1, sx2) * overlap_quadrature(p1, p2, sp1, sp2)


def test_equal_frequencies_give_unit_fidelity():
    p = OscModelParams(1.0, 1.0, 0.3, TAU)
    np.testing.assert_allclose(fidelity_free(np.linspace(0, 500, 101), p), 1.0, atol=1e-14)


def test_initial_fidelity_is_width_mismatch():
    p = OscModelParams(W1, W2, 0.18, TAU)
    sx1, sp1 = coherent_widths(W1, TAU)
    sx2, sp2 = coherent_widths(W2, TAU)
    expected = TAU / np.sqrt((sx1 + sx2) * (sp1 + sp2))
    assert fidelity_free(0.0, p) == pytest.approx(expected, rel=1e-14)
    assert expected < 1


def test_free_fidelity_envelope():
    p = OscModelParams(W1, W2, 0.18, TAU)
    t = np.arange(0, 2201)
    f = fidelity_free(t, p)
    t_min = t[np.argmin(f)]
    assert abs(t_min - np.pi / abs(W1 - W2)) < 10
    assert f[1088] > 0.99


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0, 5000))
def test_free_fidelity_against_quadrature(t):
    p = OscModelParams(W1, W2, 0.18, TAU)
    assert abs(fidelity_free(t, p) - brute_force_fidelity(t, p)) < 1e-10


def test_zero_gamma_reduces_to_free_form():
    p = interacting(0.0)
    t = np.linspace(0, 300, 301)
    sx, sp = s_terms_exact(t, p)
    cx, cp = np.cos(W1 * t), np.cos(W2 * t)
    expected_x = 0.18 ** 2 * (cx - cp) ** 2 / (2 * p.sigma_x2)
    np.testing.assert_allclose(sx, expected_x, rtol=1e-12, atol=1e-15)
    assert s_terms_exact(0.0, interacting())[0] == 0.0


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0, 3000), scale=st.floats(0, 1))
def test_s_terms_against_quadrature(t, scale):
    p = interacting(scale)
    sx_sum, sp_sum = summed_widths(t, p)
    x1, p1 = trajectory(t, p.omega1, p.rho)
    x2, p2 = trajectory(t, p.omega2, p.rho)
    s_x, s_p = s_terms_exact(t, p)
    # split each summed width evenly; only the sum enters the overlap
    for (a, b, total, s) in ((x1, x2, sx_sum, s_x), (p1, p2, sp_sum, s_p)):
        ov = overlap_quadrature(a, b, total / 2, total / 2)
        ov0 = overlap_quadrature(a, a, total / 2, total / 2)
        assert -2 * np.log(ov / ov0) == pytest.approx(float(s), abs=1e-10)


def test_expansion_without_gamma():
    p = interacting(0.0)
    t = np.arange(0, 500.0)
    terms = a_terms(t, p)
    for k in ("A4", "A5", "A6", "A7", "A8"):
        assert np.max(np.abs(terms[k])) == 0.0
    sx, sp = s_terms_exact(t, p)
    np.testing.assert_allclose(terms["A1"] + terms["A2"] + terms["A3"], sx + sp, atol=1e-10)


def test_expansion_remainder_is_second_order():
    t = np.arange(0, 2001.0)
    devs = []
    for scale in (0.5, 0.25):
        p = interacting(scale)
        sx, sp = s_terms_exact(t, p)
        devs.append(np.max(np.abs(s_sum_expanded(t, p) - (sx + sp))))
    assert 3.2 <= devs[0] / devs[1] <= 4.8


def test_expansion_families_have_expected_frequencies():
    p = interacting()
    ws, dw, Om = W1 + W2, W1 - W2, p.Omega
    for term in expansion_terms(p):
        f = abs(term.freq)
        if term.family == "A1":
            assert f == 0
        elif term.family == "A2":
            assert f == pytest.approx(abs(dw))
        elif term.family == "A4":
            assert f in (pytest.approx(p.Omega1), pytest.approx(p.Omega2))
        elif term.family in ("A5", "A6"):
            assert abs(f - Om) < 0.02
        elif term.family == "A7":
            assert abs(f - (ws - Om)) < 0.03
        elif term.family == "A8":
            assert abs(f - (ws + Om)) < 0.03


def test_a7_term_shows_delta_omega_line():
    target = 0.12
    Om = W1 + W2 - target
    p = interacting(Omega1=Om, Omega2=Om, gamma_x=0.0)
    t = np.arange(8192.0)
    spec = periodogram(a_terms(t, p)["A7"], window="hann")
    peak = find_band_peak(spec, (0.005, 0.1))
    assert abs(peak.nu - target / (2 * np.pi)) < 1 / 8192
    literal = a_terms(t, p, a7_literal=True)["A7"]
    assert np.ptp(literal) == 0.0


def test_expanded_exponent_spectrum_only_at_listed_frequencies():
    p = interacting()
    n = 8192
    spec = periodogram(s_sum_expanded(np.arange(float(n)), p), window="hann")
    allowed = np.array(sorted({(abs(term.freq) / (2 * np.pi)) % 1.0 for term in expansion_terms(p)}))
    allowed = np.concatenate([allowed, 1.0 - allowed])
    s = spec.magnitudes
    idx = np.nonzero((s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:]))[0] + 1
    # Hann sidelobes sit near 3e-2 of their parent line
    strong = idx[s[idx] > 5e-2 * s.max()]
    assert len(strong) >= 3
    for i in strong:
        assert np.min(np.abs(allowed - spec.frequencies[i])) <= 2.0 / n


def test_frequency_ordering_at_default_point():
    out = predicted_frequencies(interacting())
    assert out["omega_s"] > 10 * out["Delta_omega"] > 10 * abs(out["delta_omega"])


def test_predicted_periods():
    out = predicted_frequencies(OscModelParams(W1, W2, 0.18, TAU, Omega1=1.9, Omega2=1.9))
    assert out["T1"] == pytest.approx(2.99177, abs=1e-4)
    assert out["T3"] == pytest.approx(1088.0, abs=0.1)


def test_predicted_T2_from_width_frequency():
    out = predicted_frequencies(OscModelParams(1.03, 1.03, 0.18, TAU, Omega1=1.94, Omega2=1.94))
    assert out["Delta_omega"] == pytest.approx(0.12, abs=1e-12)
    assert out["T2"] == pytest.approx(52.36, abs=0.05)
    assert out["T3"] == np.inf


def test_predicted_frequencies_degenerate():
    with pytest.raises(RegimeError):
        predicted_frequencies(OscModelParams(1.03, 1.03, 0.18, TAU, Omega1=2.06, Omega2=2.06))


def test_validity_domain_enforced():
    sx, _ = coherent_widths(1.0, TAU)
    with pytest.raises(RegimeError):
        OscModelParams(1.0, 1.0, 0.1, TAU, gamma_x=0.5 * 2 * sx)
    with pytest.raises(RegimeError):
        OscModelParams(1.0, 1.0, 0.1, TAU, sigma_x2=1e-4, sigma_p2=1e-4)


def test_wigner_correlation_full_period_lag():
    w = 2 * np.pi / 6
    p = OscModelParams(w, w, 0.18, TAU)
    g = wigner_correlation_analytic(np.linspace(0, 100, 57), 6.0, p)
    np.testing.assert_allclose(g, 1.0, atol=1e-12)


def test_wigner_correlation_small_lag():
    p = interacting()
    # breathing widths leave the floor, so the zero-lag limit is the width mismatch factor
    sx = p.sigma_x2 + p.gamma_x * np.cos(p.Omega1 * 17.0 + p.phi_x)
    sp = p.sigma_p2 + p.gamma_p * np.cos(p.Omega1 * 17.0 + p.phi_p)
    limit = TAU / (2 * np.sqrt(sx * sp))
    assert float(wigner_correlation_analytic(17.0, 1e-7, p)) == pytest.approx(limit, abs=1e-6)
    g = wigner_correlation_analytic(np.array([17.0]), 1e-7, interacting(0.0))
    assert g[0] == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(RegimeError):
        wigner_correlation_analytic(1.0, 0.0, p)


def test_wigner_correlation_intermediate_line():
    w, Om = 1.03, 1.94
    p = OscModelParams(w, w, 0.18, TAU, gamma_x=4e-4, gamma_p=4e-4, Omega1=Om, Omega2=Om, phi_x=0.2, phi_p=0.9)
    g = wigner_correlation_analytic(np.arange(4001.0), 1.0, p)
    spec = periodogram(g)
    peak = find_band_peak(spec, (0.005, 0.1))
    assert abs(peak.nu - (2 * w - Om) / (2 * np.pi)) < 1.0 / 4001


def test_interacting_fidelity_consistent_with_terms():
    p = interacting()
    t = np.arange(0, 100.0)
    sx, sp = summed_widths(t, p)
    s_x, s_p = s_terms_exact(t, p)
    np.testing.assert_allclose(fidelity_interacting(t, p), TAU / np.sqrt(sx * sp) * np.exp(-(s_x + s_p) / 2))
