import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint
from scipy import special

from fasuav.channel import BASELINE, DSParams, FasModel
from fasuav.correlation import EigenModel, jakes_eigen_model
from fasuav.errors import DomainError, ParameterError
from fasuav.metrics import (BPSK, MODULATIONS, CapacityConfig, ModulationSpec, aber, aber_from_cdf,
                            aber_series_m2, asymptotic_report, branch_constants, capacity,
                            capacity_from_sf, default_slope_window, diversity_order, fit_outage_slope,
                            moment_integral_m2, outage, outage_m2)
from fasuav.montecarlo import SimConfig, estimate_ber, estimate_capacity, estimate_outage, simulate_approx


def db(x):
    return 10.0 ** (x / 10.0)


def model_at(x_db, n=4, w=1.0, params=BASELINE):
    eig = EigenModel.from_eigenvalues([1.0]) if n == 1 else jakes_eigen_model(n, w)
    return FasModel(eig, params, db(x_db))


def expect_over_pdf(model, g):
    """``E[g(gamma)]`` by integrating against the density in log-SNR."""
    c = math.log(model.avg_snr)
    f = lambda t: g(math.exp(t)) * float(model.pdf(math.exp(t))) * math.exp(t)
    pts = c + np.array([-40.0, -10, -3, 0, 3, 10, 60])
    return sum(sint.quad(f, a, b, epsabs=1e-16, epsrel=1e-11, limit=300)[0] for a, b in zip(pts, pts[1:]))


def conditional_ber(mod, g):
    return 0.5 * special.gammaincc(mod.beta, mod.kappa * g)


# -- oracles ----------------------------------------------------------------

@pytest.mark.parametrize("mod", list(MODULATIONS.values()))
def test_aber_limits_for_constant_cdfs(mod):
    # F = 1 everywhere means the link is always down: BER 1/2
    assert aber_from_cdf(lambda g: np.ones_like(g), mod) == pytest.approx(0.5, rel=1e-9)
    assert aber_from_cdf(lambda g: np.zeros_like(g), mod) == 0.0


@pytest.mark.parametrize("mod", list(MODULATIONS.values()))
def test_aber_of_a_fixed_snr_is_conditional_ber(mod):
    g0 = 2.3
    step = lambda g: (np.asarray(g) >= g0).astype(float)
    assert aber_from_cdf(step, mod) == pytest.approx(conditional_ber(mod, g0), rel=1e-6)


@pytest.mark.parametrize("n,x", [(1, 5.0), (4, 10.0), (8, 0.0)])
@pytest.mark.parametrize("name", ["BPSK", "NCBFSK"])
def test_aber_against_density_expectation(n, x, name):
    mod = MODULATIONS[name]
    model = model_at(x, n, 1.5 if n == 8 else 1.0)
    ref = expect_over_pdf(model, lambda g: conditional_ber(mod, g))
    assert aber(model, mod) == pytest.approx(ref, rel=1e-6)


def test_capacity_of_a_fixed_snr():
    g0 = 7.0
    sf = lambda g: (np.asarray(g) < g0).astype(float)
    assert capacity_from_sf(sf, 1.0, knee=100.0, breakpoints=(g0,)) == pytest.approx(math.log2(1 + g0),
                                                                                    rel=1e-9)


@pytest.mark.parametrize("n,x", [(1, 5.0), (4, 10.0), (4, 25.0)])
def test_capacity_against_density_expectation(n, x):
    model = model_at(x, n)
    ref = expect_over_pdf(model, lambda g: math.log2(1.0 + g))
    assert capacity(model) == pytest.approx(ref, rel=1e-7)
    assert capacity(model, CapacityConfig(2.0)) == pytest.approx(2 * ref, rel=1e-7)


def test_outage_m2_matches_product_form():
    model = model_at(10.0, 2, 0.5)
    assert model.M == 2
    for th in (0.1, 1.0, 30.0):
        assert outage_m2(model, th) == pytest.approx(outage(model, th), rel=1e-12)


def test_branch_constants():
    model = model_at(10.0, 2, 0.5)
    assert branch_constants(model) == pytest.approx(model.branch.scale / model.eigenvalues, rel=1e-15)


def test_modulation_presets():
    assert (BPSK.kappa, BPSK.beta) == (1.0, 0.5)
    assert MODULATIONS["DBPSK"] == ModulationSpec(1.0, 1.0, "DBPSK")
    assert (MODULATIONS["BFSK"].kappa, MODULATIONS["NCBFSK"].beta) == (0.5, 1.0)


# -- moment integrals -------------------------------------------------------

@pytest.mark.parametrize("rho", [-0.5, -1.5, -3.0])
def test_moment_integral_mellin_form_against_quadrature(rho):
    model = model_at(20.0, 2, 0.5)
    c = math.log(model.avg_snr)
    f = lambda t: math.exp(rho * t) * float(model.cdf(math.exp(t)))
    # towards zero SNR the integrand falls like gamma^(rho + 2 min m), so the
    # cut at e^-80 is negligible for these rho
    pts = c + np.array([-80.0, -20, -5, 0, 5, 20, 80])
    ref = sum(sint.quad(f, a, b, epsabs=1e-18, epsrel=1e-12, limit=300)[0] for a, b in zip(pts, pts[1:]))
    assert moment_integral_m2(model, rho) == pytest.approx(ref, rel=1e-9)


def test_moment_integral_literal_layout_differs():
    # the literal coefficient arrangement does not reproduce the integral
    model = model_at(20.0, 2, 0.5)
    good = moment_integral_m2(model, -1.5)
    literal = moment_integral_m2(model, -1.5, form="literal")
    assert abs(literal / good - 1.0) > 1.0


def test_moment_integral_unknown_form():
    with pytest.raises(ValueError):
        moment_integral_m2(model_at(20.0, 2, 0.5), -1.0, form="other")


# -- ABER series diagnostic -------------------------------------------------

def test_aber_series_report_structure():
    model = model_at(20.0, 2, 0.5)
    rep = aber_series_m2(model, BPSK, 12)
    assert len(rep.partial_sums) == len(rep.terms) == len(rep.moments) == 13
    assert np.allclose(np.cumsum(rep.terms), rep.partial_sums, rtol=1e-12)
    assert rep.n_star == int(np.argmin(rep.magnitudes))
    assert rep.estimate == rep.partial_sums[rep.n_star]
    assert rep.divergent == (rep.n_star < 3)
    assert rep.quadrature == pytest.approx(aber(model, BPSK), rel=1e-12)
    assert set(rep.as_dict()) >= {"n_star", "partial_sums", "divergent_before_3", "quadrature"}


def test_aber_series_first_moment_independent_of_contour():
    from fasuav.meijer import GSpec, meijer_g
    model = model_at(20.0, 2, 0.5)
    rep = aber_series_m2(model, BPSK, 3)
    p = model.params
    c1, c2 = branch_constants(model)
    r = 0.5
    spec = GSpec(5, 5, (1 - p.alpha2, 1 - p.alpha1, 1.0, 1 - p.m1 - r, 1 - p.m2 - r, 1 - r),
                 (p.m1, p.m2, p.alpha2 - r, p.alpha1 - r, -r, 0.0))
    lo, hi = spec.strip()
    alt = meijer_g(spec, c2 / c1, abscissa=lo + 0.27 * (hi - lo))
    from fasuav.channel import s_ds
    assert rep.moments[0] == pytest.approx(s_ds(p) ** 2 * c1 ** -r * alt, rel=1e-6)


def test_aber_series_is_divergent_at_baseline():
    rep = aber_series_m2(model_at(20.0, 2, 0.5), BPSK, 20)
    assert rep.divergent


def test_aber_series_errors():
    with pytest.raises(ParameterError):
        aber_series_m2(model_at(20.0, 4, 1.0), BPSK)
    equal = FasModel(EigenModel.from_eigenvalues([1.0, 1.0]), BASELINE, 10.0)
    with pytest.raises(ParameterError):
        aber_series_m2(equal, BPSK)


# -- diversity --------------------------------------------------------------

def test_diversity_order_report():
    rep = diversity_order(BASELINE, 4)
    assert rep.single_link_d == 2.1
    assert rep.system_Gd == pytest.approx(8.4)
    with pytest.raises(ParameterError):
        diversity_order(BASELINE, 0)


def test_single_link_slope():
    slope = fit_outage_slope(model_at(0.0, 1), 1.0, (40.0, 60.0))
    assert slope == pytest.approx(2.1, rel=0.05)


def test_two_branch_slope():
    slope = fit_outage_slope(model_at(0.0, 2, 0.5), 1.0, (40.0, 55.0))
    assert slope == pytest.approx(4.2, rel=0.10)


def test_slope_insensitive_to_threshold():
    model = model_at(0.0, 2, 0.5)
    a = fit_outage_slope(model, 1.0, (40.0, 55.0))
    b = fit_outage_slope(model, 2.0, (40.0, 55.0))
    assert abs(a / b - 1.0) < 0.01


def test_slope_window_errors():
    with pytest.raises(ParameterError):
        fit_outage_slope(model_at(0.0, 4), 1.0, (0.0, 10.0))
    with pytest.raises(DomainError):
        fit_outage_slope(model_at(0.0, 8, 1.5), 1.0, (200.0, 260.0))


def test_default_slope_window():
    assert default_slope_window(8.4) == (40.0, 55.0)
    assert default_slope_window(14.7) == (30.0, 45.0)
    assert default_slope_window(16.8) == (20.0, 35.0)


def test_asymptotic_report_fills_fit():
    rep = asymptotic_report(model_at(0.0, 1))
    assert rep.fit_range == (40.0, 55.0)
    assert rep.fitted_slope == pytest.approx(2.1, rel=0.05)


# -- properties -------------------------------------------------------------

@settings(max_examples=20)
@given(st.floats(-10, 30), st.floats(0.2, 3.0))
def test_outage_monotone(x, gap):
    model = model_at(x)
    assert outage(model, 1.0) <= outage(model, 1.0 + gap)
    assert outage(model.with_avg_snr(db(x + gap)), 1.0) <= outage(model, 1.0)


def test_metric_grid_monotonicity():
    snrs = np.linspace(-5, 30, 20)
    for name, mod in MODULATIONS.items():
        vals = [aber(model_at(x), mod) for x in snrs]
        assert all(0 < v < 0.5 for v in vals), name
        assert np.all(np.diff(vals) < 0), name
    caps = [capacity(model_at(x)) for x in snrs]
    assert np.all(np.diff(caps) > 0)
    outs = [outage(model_at(x), th) for x in snrs for th in np.logspace(-1, 1, 20)]
    grid = np.array(outs).reshape(20, 20)
    assert np.all(np.diff(grid, axis=0) <= 0) and np.all(np.diff(grid, axis=1) >= 0)


@settings(max_examples=15)
@given(st.floats(0.8, 4.0), st.floats(0.8, 4.0), st.floats(1.5, 5.0), st.floats(1.5, 5.0))
def test_more_ports_help(m1, m2, a1, a2):
    p = DSParams(m1, m2, a1, a2)
    one = FasModel(EigenModel.from_eigenvalues([1.0]), p, 10.0)
    four = FasModel(jakes_eigen_model(4, 1.0), p, 10.0)
    assert outage(four, 1.0) < outage(one, 1.0)
    assert aber(four) < aber(one)


def test_capacity_grows_with_an_extra_branch():
    base = FasModel(EigenModel.from_eigenvalues([1.2, 0.7]), BASELINE, 10.0)
    more = FasModel(EigenModel.from_eigenvalues([1.2, 0.7, 0.05]), BASELINE, 10.0)
    assert capacity(more) >= capacity(base)


def test_outage_vanishes_at_small_threshold():
    assert outage(model_at(10.0), 1e-12) < 1e-30


def test_input_errors():
    with pytest.raises(DomainError):
        outage(model_at(10.0), 0.0)
    with pytest.raises(ParameterError):
        outage_m2(model_at(10.0), 1.0)
    with pytest.raises(ParameterError):
        ModulationSpec(0.0, 0.5)
    with pytest.raises(ParameterError):
        CapacityConfig(-1.0)


# -- Monte-Carlo cross-check ------------------------------------------------

def test_metrics_against_simulation():
    model = model_at(10.0)
    s = simulate_approx(model, SimConfig(seed=11, samples=1_000_000))
    out = estimate_outage(s, 1.0)
    se = math.sqrt(out.value * (1 - out.value) / s.size)
    assert abs(out.value - outage(model, 1.0)) <= 3 * se
    assert estimate_ber(s, BPSK).value == pytest.approx(aber(model, BPSK), rel=0.02)
    assert estimate_capacity(s).value == pytest.approx(capacity(model), rel=0.01)
