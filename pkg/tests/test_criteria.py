import math
import random

import pytest

from conftest import cf, gf, pf, simple_model
from nicholson import criteria as cr
from nicholson.model import field_from_config, load_model
from nicholson.experiments import er2019_model, ex42_model, ex43_model

SQRT2 = math.sqrt(2.0)
SQRT7 = math.sqrt(7.0)


def window_sup_oracle(const, amp, width):
    """Supremum over t of the integral of const + amp*cos(2 pi t + phase)
    over a trailing window of fixed width, by the antiderivative."""
    return const * width + (amp / math.pi) * math.sin(math.pi * width)


# ---------------------------------------------------------------------------
# sliding window integrals
# ---------------------------------------------------------------------------

def test_window_constant_fields():
    f = field_from_config(cf("1"))
    assert cr.sliding_window_integral(f, 0.2, "sup") == pytest.approx(0.2)
    assert cr.sliding_window_integral(f, 0.0, "sup") == 0.0


def test_window_periodic_integrand():
    f = field_from_config(pf("1+0.5*cos(2*pi*t)"))
    got = cr.sliding_window_integral(f, 0.2, "sup")
    oracle = window_sup_oracle(1.0, 0.5, 0.2)
    assert got == pytest.approx(oracle, abs=1e-9)
    got_inf = cr.sliding_window_integral(f, 0.2, "inf")
    oracle_inf = 0.2 - (0.5 / math.pi) * math.sin(0.2 * math.pi)
    assert got_inf == pytest.approx(oracle_inf, abs=1e-9)


def test_window_varying_width():
    f = field_from_config(cf("1"))
    w = field_from_config(pf("0.1*(1+sin(2*pi*t))"))
    got = cr.sliding_window_integral(f, w, "sup")
    assert got == pytest.approx(0.2, abs=1e-9)


def test_window_commensurate_periods():
    f = field_from_config(pf("1+0.25*cos(2*pi*t)", period=1.0))
    w = field_from_config(pf("0.1*(1+sin(pi*t))", period=2.0))
    got = cr.sliding_window_integral(f, w, "sup")
    # window width peaks at 0.2 where the integrand is also near its crest;
    # brute-force oracle on a dense grid
    import numpy as np
    from nicholson.numerics import adaptive_simpson
    ts = np.linspace(0.0, 2.0, 20001)
    vals = [adaptive_simpson(f.fn, t - w.fn(t), t, tol=1e-12) for t in ts]
    assert got == pytest.approx(max(vals), abs=1e-7)


def test_window_incommensurate_periods_rejected():
    f = field_from_config(pf("1+0.25*cos(2*pi*t)", period=1.0))
    w = field_from_config(pf("0.1*(1+sin(2*t))", period=math.pi))
    with pytest.raises(cr.IncommensurablePeriodsError):
        cr.sliding_window_integral(f, w, "sup")


def test_window_generic_requires_scan():
    f = field_from_config(gf("1+1/(1+t)", (0.0, 40.0)))
    got = cr.sliding_window_integral(f, 0.5, "sup")
    # decreasing integrand: the sup sits at the left end t = 0.5 of the
    # shrunk scan, where the window covers [0, 0.5]
    assert got == pytest.approx(0.5 + math.log(1.5), abs=1e-8)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def test_stats_constant_model(classic):
    st = cr.compute_stats(classic)
    assert st.alpha == pytest.approx(math.e, rel=1e-12)
    assert st.gamma == pytest.approx(math.e, rel=1e-12)
    assert st.D == pytest.approx(1.0, abs=1e-10)
    assert st.P == pytest.approx(math.e, abs=1e-9)
    assert st.zeta_plus == pytest.approx(1.0, abs=1e-10)
    assert not st.horizon_limited


def test_stats_er2019_beta_windows():
    st = cr.compute_stats(er2019_model())
    assert st.beta_C == pytest.approx(1.0, abs=1e-10)        # window tau = 1
    assert st.beta_zeta_plus == pytest.approx(0.5, abs=1e-10)  # window sigma


def test_stats_two_pair_periodic_zeta():
    st = cr.compute_stats(ex43_model(1.0, 2.0, 1.0))
    oracle = window_sup_oracle(1.0, 0.5, 0.2)
    assert st.zeta_plus == pytest.approx(oracle, abs=1e-9)
    assert len(st.per_j_zeta) == 2
    assert st.per_j_zeta[0] == pytest.approx(oracle, abs=1e-9)
    assert st.per_j_zeta[1] < st.per_j_zeta[0]
    assert st.alpha <= st.gamma
    assert st.D <= st.P


def test_ratio_extrema_exact_closed_form():
    """The scanned ratio extrema equal eta1/eta0 + (4 -+ sqrt(7))/3 *
    eta2/eta0 (tangency of lines from (-2,-2) to the unit circle); the
    quoted (2 -+ sqrt(2))^2 forms are strict outer bounds."""
    rng = random.Random(20240809)
    for _ in range(20):
        e0 = rng.uniform(0.05, 3.0)
        e1 = rng.uniform(0.05, 3.0)
        e2 = rng.uniform(0.01, 3.0)
        alpha, gamma = cr.ratio_extrema(ex43_model(e0, e1, e2))
        alpha_exact = e1 / e0 + (4.0 - SQRT7) / 3.0 * e2 / e0
        gamma_exact = e1 / e0 + (4.0 + SQRT7) / 3.0 * e2 / e0
        assert alpha == pytest.approx(alpha_exact, abs=1e-8)
        assert gamma == pytest.approx(gamma_exact, abs=1e-8)
        alpha_bound = (2 * e1 + (2 - SQRT2) ** 2 * e2) / (2 * e0)
        gamma_bound = (2 * e1 + (2 + SQRT2) ** 2 * e2) / (2 * e0)
        assert alpha_bound <= alpha + 1e-9
        assert gamma <= gamma_bound + 1e-9


def test_stats_generic_flagged():
    m = simple_model(p=gf("2 + 1/(1+t)", (0.0, 50.0)))
    st = cr.compute_stats(m)
    assert st.horizon_limited


# ---------------------------------------------------------------------------
# equilibrium
# ---------------------------------------------------------------------------

def test_equilibrium_closed_form(classic):
    K, res = cr.solve_equilibrium(classic)
    assert K == pytest.approx(1.0, abs=1e-12)
    assert res < 1e-12


def test_equilibrium_ex42():
    K1, _ = cr.solve_equilibrium(ex42_model(1))
    assert K1 == pytest.approx(math.log(1.1), abs=1e-12)
    # independent quadratic oracle in u = exp(-K/2)
    u = -0.6 + math.sqrt(0.36 + 2.0)
    K2_oracle = -2.0 * math.log(u)
    K2, _ = cr.solve_equilibrium(ex42_model(2))
    assert K2 == pytest.approx(K2_oracle, abs=1e-10)
    for N in range(1, 11):
        KN, res = cr.solve_equilibrium(ex42_model(N))
        assert KN < 0.25
        assert res < 1e-12


def test_equilibrium_bracket_straddles():
    # endpoints of the bisection bracket have opposite residual signs
    for N in (1, 2, 5):
        m = ex42_model(N)
        ps = [t.p(0.0) for t in m.terms]
        as_ = [t.a(0.0) for t in m.terms]
        delta = m.delta(0.0)
        p = sum(ps)

        def F(K):
            return sum(pj * math.exp(-aj * K)
                       for pj, aj in zip(ps, as_)) - delta

        lo = math.log(p / delta) / max(as_)
        hi = math.log(p / delta) / min(as_)
        assert F(lo) >= 0.0 >= F(hi)


def test_equilibrium_none_when_subcritical():
    assert cr.solve_equilibrium(simple_model(p="0.9")) is None


def test_equilibrium_proportional_time_varying():
    m = ex43_model(0.1, 0.1 * math.e, 0.0)
    K, res = cr.solve_equilibrium(m)
    assert K == pytest.approx(1.0, abs=1e-6)
    assert res < 1e-8 * m.delta.sup()


def test_equilibrium_nonproportional_has_residual():
    m = ex43_model(1.0, 2.0, 1.0)
    K, res = cr.solve_equilibrium(m)
    assert res > 1e-8 * m.delta.sup()  # (K1) must not pass


# ---------------------------------------------------------------------------
# bounds and verdicts
# ---------------------------------------------------------------------------

def test_permanence_bounds_formula(classic):
    st = cr.compute_stats(classic)
    m, M = cr.permanence_bounds(st, 1.0, 1.0)
    assert m == pytest.approx(math.exp(-(2.0 + math.e)), rel=1e-9)
    assert M == pytest.approx(math.exp(2.0 * (1.0 + math.e)), rel=1e-8)


def test_permanence_bounds_zero_delay():
    m0 = simple_model(tau="0", sigma="0", p="e")
    st = cr.compute_stats(m0)
    m, M = cr.permanence_bounds(st, 1.0, 1.0)
    assert m == pytest.approx(1.0, abs=1e-12)  # log(alpha)/a_plus
    assert M == pytest.approx(1.0, abs=1e-12)


def test_beta_permanence_bounds():
    lo, hi = cr.beta_permanence_bounds(K=1.0, delta=1.0, p_sum=math.e, C=1.0)
    assert lo == pytest.approx(math.exp(-(2.0 + math.e)), rel=1e-12)
    assert hi == pytest.approx(math.exp(2.0 * (1.0 + math.e)), rel=1e-12)


def test_extinction_verdict():
    st = cr.compute_stats(simple_model(p="0.9"))
    v = cr.check_extinction(simple_model(p="0.9"), st)
    assert v.passed and v.margin == pytest.approx(0.9, rel=1e-12)
    st2 = cr.compute_stats(simple_model(p="e"))
    assert not cr.check_extinction(simple_model(p="e"), st2).passed
    # proportional ratio stays at 1/2
    m3 = load_model({
        "delta": pf("1+0.5*cos(2*pi*t)"),
        "terms": [{"p": pf("0.5*(1+0.5*cos(2*pi*t))"), "a": cf("1"),
                   "tau": cf("1"), "sigma": cf("1")}]})
    st3 = cr.compute_stats(m3)
    v3 = cr.check_extinction(m3, st3)
    assert v3.passed and v3.margin == pytest.approx(0.5, abs=1e-9)


def test_a1_a2_a3_constant(classic):
    st = cr.compute_stats(classic)
    out = cr.check_A1_A2_A3(classic, st)
    assert out["A1"].passed and out["A2"].passed and out["A3"].passed


def test_a3_generic_decaying_fails():
    m = simple_model(delta=gf("exp(-t)", (0.0, 40.0)))
    st = cr.compute_stats(m)
    v = cr.check_A1_A2_A3(m, st)["A3"]
    assert not v.passed
    assert v.status == "horizon-limited"


def test_k2_boundary_semantics():
    v = cr.check_K2(1.0, 1.0, math.log(2.0))
    assert v.margin == pytest.approx(1.0, rel=1e-15)
    assert v.passed  # boundary included
    assert not cr.check_K2(1.0, 1.0, 1.0).passed
    K = math.log(1.1)
    v3 = cr.check_K2(K, 1.0, 1.0)
    assert v3.margin == pytest.approx(K * (math.e - 1.0), rel=1e-12)
    assert v3.passed


def test_k2_star():
    v = cr.check_K2_star(1.0, 1.0, math.e, math.log(2.0))
    assert v.margin == pytest.approx(1.0, rel=1e-14) and v.passed
    v2 = cr.check_K2_star(0.5, 1.0, 1.1, 1.0)
    assert v2.margin == pytest.approx(
        2.0 * (math.e - 1.0) * math.log(1.1), rel=1e-12)
    assert v2.passed
    assert not cr.check_K2_star(0.5, 1.0, math.e ** 2, 1.0).passed


def test_k2_star_implies_k2():
    # whenever the equilibrium-free margin passes, the equilibrium one does
    rng = random.Random(7)
    checked = 0
    for _ in range(200):
        a_minus = rng.uniform(0.2, 2.0)
        a_plus = a_minus * rng.uniform(1.0, 3.0)
        gamma = rng.uniform(1.05, 9.0)
        zeta = rng.uniform(0.0, 1.5)
        star = cr.check_K2_star(a_minus, a_plus, gamma, zeta)
        if not star.passed:
            continue
        # K cannot exceed log(gamma)/a_minus for any admissible model
        K = rng.uniform(1e-6, math.log(gamma) / a_minus)
        assert cr.check_K2(K, a_plus, zeta).passed
        checked += 1
    assert checked > 20


def test_h3():
    v = cr.check_H3(1.0, 1.0, 1.0, 0.5)
    assert v.margin == pytest.approx(math.exp(0.5) - 1.0, rel=1e-12)
    assert v.passed
    v2 = cr.check_H3(math.log(1.1), 1.0, 1.0, 0.5)
    assert v2.margin == pytest.approx(0.0618, abs=5e-5) and v2.passed
    v3 = cr.check_H3(1.0, 1.0, 2.0, 1.0)
    assert v3.margin == pytest.approx(math.e ** 2 - 1.0, rel=1e-12)
    assert not v3.passed


def test_a4():
    # equal bounds collapse to the equilibrium criterion
    K, zeta = 0.7, 0.4
    vK = cr.check_K2(K, 1.3, zeta)
    vA = cr.check_A4(K, K, 1.3, zeta)
    assert abs(vA.margin - vK.margin) < 1e-14
    v = cr.check_A4(0.9, 1.0, 1.0, 0.0)
    assert v.margin == pytest.approx(1.0 / 0.9 - 1.0, rel=1e-12) and v.passed
    v2 = cr.check_A4(0.5, 1.5, 1.0, 0.1)
    assert v2.margin == pytest.approx(
        1.5 * (3.0 * math.exp(0.1) - 1.0), rel=1e-12)
    assert not v2.passed


def test_a5():
    m = simple_model(p="e", tau="0.01", sigma="0.01")
    st = cr.compute_stats(m)
    v = cr.check_A5(st, 1.0, 1.0)
    assert v.margin == pytest.approx(0.152, abs=2e-3)
    assert v.passed
    st2 = cr.compute_stats(simple_model(p="e"))
    assert not cr.check_A5(st2, 1.0, 1.0).passed
    # vanishing delays with alpha == gamma: margin collapses to zero
    st3 = cr.compute_stats(simple_model(p="e", tau="0", sigma="0"))
    v3 = cr.check_A5(st3, 1.0, 1.0)
    assert abs(v3.margin) < 1e-9 and v3.passed


def test_a5_equals_a4_at_uniform_bounds():
    st = cr.compute_stats(ex43_model(1.0, 2.0, 1.0))
    m, M = cr.permanence_bounds(st, 1.0, 1.0)
    direct = cr.check_A5(st, 1.0, 1.0).margin
    via_a4 = cr.check_A4(m, M, 1.0, st.zeta_plus).margin
    assert direct == pytest.approx(via_a4, rel=1e-12)


def test_periodic_conditions():
    m = ex43_model(0.1, 0.1 * math.e, 0.0)
    out = cr.check_periodic_conditions(m, 1.0)
    assert out["periodic1"].passed
    v2 = out["periodic2"]
    zeta = 0.1 * window_sup_oracle(1.0, 0.5, 0.2)
    expected = math.exp(0.1) * 1.0 * (math.exp(0.1 + zeta) - 1.0)
    assert v2.margin == pytest.approx(expected, abs=1e-6)
    assert v2.passed
    # identical coefficients violate the strict-excess clause
    flat = load_model({
        "delta": pf("0.1*(1+0.5*cos(2*pi*t))"),
        "terms": [{"p": pf(f"{0.1 * math.exp(0.1)!r}*(1+0.5*cos(2*pi*t))"),
                   "a": cf("1"), "tau": cf("0.2"), "sigma": cf("0.2")}]})
    res = cr.check_periodic_conditions(flat, 1.0)
    assert not res["periodic1"].passed
    with pytest.raises(cr.CriteriaError):
        cr.check_periodic_conditions(simple_model(
            delta=gf("1+1/(1+t)", (0.0, 10.0))), 1.0)


def test_periodic_alternative_route():
    m = ex43_model(0.1, 0.1 * math.e, 0.02)
    out = cr.check_periodic_conditions(m, 1.0)
    # integral of p over one period is eta1 + eta2
    mass = 0.1 * math.e + 0.02
    threshold = math.exp(0.1) * (math.exp(0.1) - 1.0)
    assert out["periodic_alternative"].margin == pytest.approx(
        mass / threshold, rel=1e-9)
    assert out["periodic_alternative"].passed == (mass >= threshold)


def test_build_report_shape(classic):
    rep = cr.build_report(classic)
    assert rep.K == pytest.approx(1.0, abs=1e-12)
    assert rep.verdicts["K1"].passed
    assert not rep.verdicts["K2"].passed          # margin e-1 at zeta = 1
    assert rep.m_bound is not None
    data = rep.to_json_dict()
    assert set(data) >= {"stats", "K", "bounds", "verdicts", "a_minus",
                         "a_plus"}
    for name, v in data["verdicts"].items():
        assert set(v) >= {"pass", "margin", "comparison", "horizon_limited"}
    # serialisation is deterministic
    assert rep.to_json() == cr.build_report(classic).to_json()


def test_build_report_beta_bounds():
    rep = cr.build_report(er2019_model())
    assert rep.beta_bounds is not None
    lo, hi = rep.beta_bounds
    assert lo == pytest.approx(math.exp(-(2.0 + math.e)), rel=1e-9)
    assert hi == pytest.approx(math.exp(2.0 * (1.0 + math.e)), rel=1e-9)
    assert rep.verdicts["H3"].passed
    assert rep.verdicts["H3"].margin == pytest.approx(
        math.exp(0.5) - 1.0, abs=1e-9)


def test_margins_reproduce_verdicts(classic):
    for m in (classic, er2019_model(), ex43_model(1.0, 2.0, 1.0)):
        rep = cr.build_report(m)
        for name, v in rep.verdicts.items():
            if v.comparison == "<=1":
                assert v.passed == (v.margin <= 1.0)
            elif v.comparison == "<1":
                assert v.passed == (v.margin < 1.0)
