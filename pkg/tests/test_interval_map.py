import math
import random
import statistics

import pytest

from nicholson import interval_map as im


def valid_spec(K, a_plus, margin):
    theta0 = 1.0 / (1.0 + margin / (a_plus * K))
    return im.MapSpec(K=K, a_plus=a_plus, theta0=theta0)


def test_g_eval():
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    assert im.g_eval(spec, 1.0) == 1.0
    assert im.g_eval(spec, 2.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    spec2 = im.MapSpec(K=1.0, a_plus=2.0, theta0=0.9)
    assert im.g_eval(spec2, 0.5) == pytest.approx(math.e, rel=1e-15)
    with pytest.raises(im.MapDomainError):
        im.g_eval(spec, 0.0)


def test_h_eval_fixed_point_and_limits():
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    assert im.h_eval(spec, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert im.h_eval(spec, 2.0) == pytest.approx(
        0.5 / (1.0 - 0.5 * math.exp(-1.0)), rel=1e-15)
    assert im.h_eval(spec, 80.0) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(im.MapDomainError):
        im.h_eval(spec, 0.25)


def test_frak_h_matches_theta0_form():
    K = math.log(1.1)
    for x in (K, 0.2, 1.0, 3.0):
        direct = im.frak_h(K, 1.0, math.log(2.0), x)
        spec = im.MapSpec(K=K, a_plus=1.0, theta0=0.5)
        assert direct == pytest.approx(im.h_eval(spec, x), rel=1e-15)
    # fixed-point identity for the two-term equilibrium instance
    spec42 = im.from_zeta(K=0.0953101798043249, a_plus=1.0, zeta_plus=1.0)
    assert im.h_eval(spec42, spec42.K) == pytest.approx(spec42.K, abs=1e-14)


def test_construction_refusal_and_diagnostic():
    with pytest.raises(im.MapConstructionError):
        im.MapSpec(K=1.0, a_plus=1.0, theta0=0.25)
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.25, diagnostic=True)
    assert spec.stability_margin == pytest.approx(3.0, rel=1e-14)
    with pytest.raises(im.MapConstructionError):
        im.from_zeta(K=1.0, a_plus=1.0, zeta_plus=1.0)
    with pytest.raises(im.MapConstructionError):
        im.MapSpec(K=-1.0, a_plus=1.0, theta0=0.5)


def test_degenerate_zero_window():
    spec = im.from_zeta(K=2.0, a_plus=1.3, zeta_plus=0.0)
    assert spec.degenerate
    assert im.h_eval(spec, 7.0) == 2.0
    out = im.iterate(spec, 50.0, tol=1e-8)
    assert out.verdict == im.VERDICT_CONVERGED
    assert out.n_iterations <= 1


def test_derivative_at_K_formula_and_fd():
    rng = random.Random(31)
    for _ in range(25):
        K = rng.uniform(0.05, 2.5)
        a_plus = rng.uniform(0.3, 2.5)
        margin = rng.uniform(0.05, 1.0)
        spec = valid_spec(K, a_plus, margin)
        got = im.derivative_at_K(spec)
        expected = -a_plus * K * (1.0 / spec.theta0 - 1.0)
        assert got == pytest.approx(expected, abs=1e-12)
    diag = im.MapSpec(K=1.0, a_plus=1.0, theta0=math.exp(-1.0),
                      diagnostic=True)
    assert im.derivative_at_K(diag) == pytest.approx(-(math.e - 1.0),
                                                     abs=1e-12)
    small = im.MapSpec(K=0.0953101798043249, a_plus=1.0,
                       theta0=math.exp(-1.0))
    assert im.derivative_at_K(small) == pytest.approx(-0.16377, abs=5e-6)


def test_boundary_derivative():
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    assert im.derivative_at_K(spec) == pytest.approx(-1.0, abs=1e-12)


def test_schwarzian_constant():
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    assert im.schwarzian(spec, 1.3) == pytest.approx(-0.5, abs=1e-4)
    spec2 = valid_spec(1.0, 2.0, 0.8)
    assert im.schwarzian(spec2, spec2.K) == pytest.approx(-2.0, abs=1e-4)


def test_schwarzian_variance_and_fractional_linear_property():
    rng = random.Random(17)
    for _ in range(5):
        spec = valid_spec(rng.uniform(0.2, 2.0), rng.uniform(0.3, 2.0),
                          rng.uniform(0.2, 1.0))
        lo = spec.domain_lo * 1.001
        pts = [lo * (spec.domain_hi / lo) ** (k / 49) for k in range(50)]
        vals = [im.schwarzian(spec, x) for x in pts]
        assert statistics.pvariance(vals) < 1e-6
        # composing with the fractional-linear layer leaves it unchanged: it
        # equals the Schwarzian of the inner exponential everywhere
        target = -spec.a_plus ** 2 / 2.0
        for x in pts[::7]:
            assert im.schwarzian(spec, x) == pytest.approx(target, abs=1e-4)


def test_iterate_from_fixed_point():
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    out = im.iterate(spec, 1.0, tol=1e-8)
    assert out.verdict == im.VERDICT_CONVERGED
    assert out.n_iterations == 0


def test_iterate_oscillating_convergence():
    # the stability margin is exactly 1 here, so convergence is algebraic:
    # reaching 1e-3 takes about six million iterations
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    out = im.iterate(spec, 2.0, max_n=7_000_000, tol=1e-3)
    assert out.verdict == im.VERDICT_CONVERGED
    assert abs(out.final_x - 1.0) < 1e-3
    # orbit prefix agrees with direct iteration of the formula
    x = 2.0
    for k in range(1, 40):
        x = 0.5 / (1.0 - 0.5 * math.exp(1.0 - x))
        assert out.orbit[k] == x
    assert out.orbit[1] == pytest.approx(0.612700, abs=5e-7)
    assert out.orbit[2] == pytest.approx(1.8975280396303054, rel=1e-15)


def test_iterate_boundary_budget_reports_converging():
    # within a small budget the same orbit is cut off while its gap
    # envelope is still shrinking
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    out = im.iterate(spec, 2.0, max_n=50_000, tol=1e-3)
    assert out.verdict == im.VERDICT_MAX_ITER_CONVERGING


def test_iterate_two_cycle_detection():
    diag = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.25, diagnostic=True)
    out = im.iterate(diag, 1.5, max_n=10_000, tol=1e-8)
    assert out.verdict == im.VERDICT_TWO_CYCLE
    # the saturated cycle alternates between the interval ends
    assert out.final_x in (diag.domain_hi, pytest.approx(diag.domain_lo,
                                                         rel=1e-6))


def test_iterate_domain_checks():
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    with pytest.raises(im.MapDomainError):
        im.iterate(spec, 0.2)


def test_map_into_itself_and_monotone():
    rng = random.Random(23)
    for _ in range(5):
        spec = valid_spec(rng.uniform(0.1, 2.0), rng.uniform(0.3, 2.5),
                          rng.uniform(0.1, 1.0))
        prev_h = None
        values = []
        for k in range(2000):
            x = spec.domain_lo + (spec.domain_hi - spec.domain_lo) * k / 1999
            hx = im.h_eval(spec, x)
            assert hx >= spec.domain_lo  # float-equal only in the far tail
            if prev_h is not None:
                # decreasing; float-equal plateaus only in the flat far tail
                assert hx <= prev_h
            prev_h = hx
            values.append(hx)
        assert values[0] > values[-1]  # globally strictly decreasing
        # strict decrease wherever the map is resolvable in doubles
        mid = [im.h_eval(spec, spec.domain_lo + (spec.K - spec.domain_lo)
                         * k / 99) for k in range(100)]
        assert all(b < a for a, b in zip(mid, mid[1:]))


def test_unique_fixed_point_sign_change():
    rng = random.Random(29)
    for _ in range(10):
        spec = valid_spec(rng.uniform(0.1, 2.0), rng.uniform(0.3, 2.5),
                          rng.uniform(0.1, 1.0))
        changes = 0
        prev_sign = None
        for k in range(4000):
            x = spec.domain_lo * 1.0000001 + \
                (spec.domain_hi - spec.domain_lo * 1.0000001) * k / 3999
            s = im.h_eval(spec, x) - x
            sign = s > 0
            if prev_sign is not None and sign != prev_sign:
                changes += 1
            prev_sign = sign
        assert changes == 1


def test_derivative_margin_identity():
    # |h'(K)| <= 1 exactly when the stability margin is <= 1
    rng = random.Random(37)
    for _ in range(50):
        K = rng.uniform(0.05, 3.0)
        a_plus = rng.uniform(0.2, 3.0)
        theta0 = rng.uniform(0.05, 0.999)
        spec = im.MapSpec(K=K, a_plus=a_plus, theta0=theta0, diagnostic=True)
        margin = a_plus * K * (1.0 / theta0 - 1.0)
        assert abs(abs(im.derivative_at_K(spec, check=False)) - margin) \
            < 1e-14 * max(1.0, margin)


def test_sweep_pass_and_fail(tmp_path):
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=2.0 / 3.0)  # margin 0.5
    sweep = im.global_attractor_sweep(spec, n_seeds=64, max_n=100_000)
    assert sweep.passed
    assert sum(sweep.verdict_counts.values()) == 64
    diag = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.25, diagnostic=True)
    sweep2 = im.global_attractor_sweep(diag, n_seeds=64, max_n=50_000)
    assert not sweep2.passed
    assert sweep2.verdict_counts.get(im.VERDICT_TWO_CYCLE, 0) > 0
    data = sweep2.to_json_dict()
    assert data["passed"] is False and data["n_seeds"] == 64


def test_orbit_csv(tmp_path):
    spec = im.MapSpec(K=1.0, a_plus=1.0, theta0=0.5)
    out = im.iterate(spec, 2.0, max_n=1000, tol=1e-6)
    path = tmp_path / "orbit.csv"
    out.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n,x_n"
    assert lines[1] == "0,2"
    assert float(lines[2].split(",")[1]) == pytest.approx(0.6126998367802821)
