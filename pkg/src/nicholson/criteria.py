"""Asymptotic statistics, permanence bounds and attractivity criteria.

The analysis realises limsup/liminf-at-infinity statistics as period-exact
extrema for periodic coefficient fields and as extrema over the declared
scan horizon otherwise (such verdicts are flagged horizon-limited).  Window
integrals use adaptive Simpson quadrature to 1e-10 absolute inside a
2048-point outer grid scan with golden-section refinement.

Criterion margins follow the documented comparisons: the equilibrium-based
conditions (K2), (K2*), (H3), (A4) and the periodic contraction condition
pass at margin <= 1 (boundary included), the uniform-bounds condition (A5)
requires a strict margin < 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .model import NicholsonModel, ScalarField, CoefficientReport, validate_A0
from .numerics import adaptive_simpson, bisect_root, grid_extremum

INNER_TOL = 1e-10
OUTER_GRID = 2048
K1_REL_RESIDUAL = 1e-8
PERIODIC1_SLACK = 1e-12


class CriteriaError(Exception):
    pass


class IncommensurablePeriodsError(CriteriaError):
    pass


class MissingScanError(CriteriaError):
    pass


# ---------------------------------------------------------------------------
# Field views: uniform handling of ScalarFields and derived combinations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldView:
    fn: Callable[[float], float]
    kind: str                      # constant | periodic | generic
    period: Optional[float] = None
    scan: Optional[tuple[float, float]] = None


def as_view(f) -> FieldView:
    if isinstance(f, FieldView):
        return f
    if isinstance(f, ScalarField):
        return FieldView(fn=f.fn, kind=f.kind, period=f.period, scan=f.scan)
    if isinstance(f, (int, float)):
        v = float(f)
        return FieldView(fn=lambda t: v, kind="constant")
    raise TypeError(f"cannot view {f!r} as a field")


def _common_period(w1: float, w2: float) -> Optional[float]:
    if w1 == w2:
        return w1
    ratio = w1 / w2
    frac = Fraction(ratio).limit_denominator(64)
    if frac.numerator <= 0:
        return None
    approx = frac.numerator / frac.denominator
    if abs(ratio - approx) > 1e-9 * max(1.0, ratio):
        return None
    return w1 * frac.denominator  # == w2 * numerator


def combine_views(views: Sequence[FieldView], fn: Callable[[float], float],
                  common_period: Optional[float] = None) -> FieldView:
    """Structural class of a pointwise combination of fields."""
    if any(v.kind == "generic" for v in views):
        scans = [v.scan for v in views if v.kind == "generic"]
        lo = max(s[0] for s in scans)
        hi = min(s[1] for s in scans)
        if not lo < hi:
            raise MissingScanError("generic fields have disjoint scan horizons")
        return FieldView(fn=fn, kind="generic", scan=(lo, hi))
    periods = [v.period for v in views if v.kind == "periodic"]
    if not periods:
        return FieldView(fn=fn, kind="constant")
    w = periods[0]
    for other in periods[1:]:
        nxt = _common_period(w, other)
        if nxt is None:
            if common_period is None:
                raise IncommensurablePeriodsError(
                    f"periods {w} and {other} are not commensurate; "
                    f"declare a common period")
            nxt = common_period
        w = nxt
    return FieldView(fn=fn, kind="periodic", period=w)


def _view_extremum(view: FieldView, mode: str, grid: int = OUTER_GRID) -> float:
    if view.kind == "constant":
        return view.fn(0.0)
    if view.kind == "periodic":
        lo, hi = 0.0, view.period
    else:
        if view.scan is None:
            raise MissingScanError("generic field without a scan horizon")
        lo, hi = view.scan
    return grid_extremum(view.fn, lo, hi, mode=mode, n=grid)[1]


# ---------------------------------------------------------------------------
# Sliding-window integrals
# ---------------------------------------------------------------------------

def sliding_window_integral(f, w, mode: str = "sup",
                            common_period: Optional[float] = None,
                            grid: int = OUTER_GRID,
                            inner_tol: float = INNER_TOL) -> float:
    """Extremum over t of the integral of ``f`` over ``[t - w(t), t]``.

    ``f`` and ``w`` are ScalarFields, FieldViews or plain numbers; ``w`` must
    be nonnegative.  For periodic/constant inputs the outer scan covers one
    common period; any generic input restricts the scan to the declared
    horizon (shrunk on the left by sup w so the window stays inside it).
    """
    if mode not in ("sup", "inf"):
        raise ValueError("mode must be 'sup' or 'inf'")
    fv = as_view(f)
    wv = as_view(w)
    f_fn, w_fn = fv.fn, wv.fn

    def window_value(t: float) -> float:
        width = w_fn(t)
        if width < 0.0:
            raise CriteriaError(f"negative window width {width} at t={t}")
        if width == 0.0:
            return 0.0
        return adaptive_simpson(f_fn, t - width, t, tol=inner_tol)

    if fv.kind == "constant" and wv.kind == "constant":
        return window_value(0.0)

    combined = combine_views([fv, wv], fn=window_value,
                             common_period=common_period)
    if combined.kind == "generic":
        lo, hi = combined.scan
        w_sup = _view_extremum(
            FieldView(fn=w_fn, kind=wv.kind, period=wv.period,
                      scan=combined.scan), "max", grid)
        lo = lo + w_sup
        if not lo < hi:
            raise MissingScanError(
                "scan horizon too short for the window width")
        return grid_extremum(window_value, lo, hi,
                             mode="max" if mode == "sup" else "min",
                             n=grid)[1]
    lo, hi = 0.0, combined.period
    return grid_extremum(window_value, lo, hi,
                         mode="max" if mode == "sup" else "min", n=grid)[1]


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticStats:
    """Window statistics of the coefficient fields.

    alpha/gamma are the extrema of p(t)/delta(t); D and P the suprema of the
    integrals of delta and p over a trailing window of the global delay
    bound; zeta_plus the worst per-term supremum of the integral of delta
    over the sigma_j window.  beta_C and beta_zeta_plus are the analogous
    statistics of the factored-form modulation when one is declared.
    """
    alpha: float
    gamma: float
    D: float
    P: float
    zeta_plus: float
    per_j_zeta: tuple[float, ...]
    beta_C: Optional[float] = None
    beta_zeta_plus: Optional[float] = None
    horizon_limited: bool = False

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "D": self.D,
            "P": self.P,
            "zeta_plus": self.zeta_plus,
            "per_j_zeta": list(self.per_j_zeta),
            "beta_C": self.beta_C,
            "beta_zeta_plus": self.beta_zeta_plus,
            "horizon_limited": self.horizon_limited,
        }


def _ratio_view(model: NicholsonModel) -> FieldView:
    views = [as_view(term.p) for term in model.terms] + [as_view(model.delta)]
    delta_fn = model.delta.fn
    p_fns = [term.p.fn for term in model.terms]

    def ratio(t: float) -> float:
        return sum(fn(t) for fn in p_fns) / delta_fn(t)

    return combine_views(views, fn=ratio)


def _p_total_view(model: NicholsonModel) -> FieldView:
    views = [as_view(term.p) for term in model.terms]
    p_fns = [term.p.fn for term in model.terms]

    def total(t: float) -> float:
        return sum(fn(t) for fn in p_fns)

    return combine_views(views, fn=total)


def ratio_extrema(model: NicholsonModel,
                  grid: int = OUTER_GRID) -> tuple[float, float]:
    """(inf, sup) of p(t)/delta(t) over one period or the scan horizon."""
    ratio = _ratio_view(model)
    return (_view_extremum(ratio, "min", grid),
            _view_extremum(ratio, "max", grid))


def compute_stats(model: NicholsonModel, grid: int = OUTER_GRID) -> AsymptoticStats:
    """Compute the window statistics; requires the basic validation to pass."""
    alpha, gamma = ratio_extrema(model, grid)
    tau = model.tau_bound
    p_total = _p_total_view(model)
    D = sliding_window_integral(model.delta, tau, "sup", grid=grid)
    P = sliding_window_integral(p_total, tau, "sup", grid=grid)
    per_j = tuple(
        sliding_window_integral(model.delta, term.sigma, "sup", grid=grid)
        for term in model.terms)
    zeta_plus = max(per_j)

    beta_C = beta_zeta = None
    if model.beta_form is not None:
        beta = model.beta_form.beta
        beta_C = sliding_window_integral(beta, tau, "sup", grid=grid)
        beta_zeta = max(
            sliding_window_integral(beta, term.sigma, "sup", grid=grid)
            for term in model.terms)

    fields = [model.delta] + [getattr(term, name) for term in model.terms
                              for name in ("p", "a", "tau", "sigma")]
    if model.beta_form is not None:
        fields.append(model.beta_form.beta)
    horizon_limited = any(f.kind == "generic" for f in fields)

    return AsymptoticStats(alpha=alpha, gamma=gamma, D=D, P=P,
                           zeta_plus=zeta_plus, per_j_zeta=per_j,
                           beta_C=beta_C, beta_zeta_plus=beta_zeta,
                           horizon_limited=horizon_limited)


# ---------------------------------------------------------------------------
# Equilibrium
# ---------------------------------------------------------------------------

def _constant_coefficients(model: NicholsonModel):
    """(p_j, a_j, delta) when every coefficient field is constant, else None."""
    if model.delta.kind != "constant":
        return None
    ps, as_ = [], []
    for term in model.terms:
        if term.p.kind != "constant" or term.a.kind != "constant":
            return None
        ps.append(term.p.fn(0.0))
        as_.append(term.a.fn(0.0))
    return ps, as_, model.delta.fn(0.0)


def solve_equilibrium(model: NicholsonModel,
                      grid: int = 512) -> Optional[tuple[float, float]]:
    """Positive equilibrium K with sum_j p_j(t) exp(-a_j(t) K) = delta(t).

    Constant coefficients: bisection on the bracket
    [log(p/delta)/a_plus, log(p/delta)/a_minus] of the strictly decreasing
    residual; returns None when p <= delta.  Time-varying coefficients: the K
    minimising the sup-grid residual |delta(t) - sum_j p_j(t) exp(-a_j(t) K)|
    is returned together with that residual; the caller decides whether the
    residual is small enough to accept the equilibrium as exact.
    """
    consts = _constant_coefficients(model)
    if consts is not None:
        ps, as_, delta = consts
        p = sum(ps)
        if p <= delta:
            return None

        def F(K: float) -> float:
            return sum(pj * math.exp(-aj * K) for pj, aj in zip(ps, as_)) - delta

        ratio = math.log(p / delta)
        lo = ratio / max(as_)
        hi = ratio / min(as_)
        if lo == hi:
            return lo, abs(F(lo))
        K = bisect_root(F, lo, hi, ftol=1e-13)
        return K, abs(F(K))

    # time-varying coefficients: sup-grid residual minimisation
    ratio = _ratio_view(model)
    gamma = _view_extremum(ratio, "max")
    if gamma <= 1.0:
        return None
    a_minus = min(term.a.inf() for term in model.terms)
    K_hi = math.log(gamma) / a_minus * (1.0 + 1e-9)
    delta_fn = model.delta.fn
    term_fns = [(term.p.fn, term.a.fn) for term in model.terms]
    sample_views = [as_view(model.delta)] \
        + [as_view(term.p) for term in model.terms] \
        + [as_view(term.a) for term in model.terms]
    domain = combine_views(sample_views, fn=lambda t: t)
    if domain.kind == "constant":
        t_lo, t_hi = 0.0, 1.0
    elif domain.kind == "periodic":
        t_lo, t_hi = 0.0, domain.period
    else:
        t_lo, t_hi = domain.scan
    samples = [t_lo + (t_hi - t_lo) * k / 256 for k in range(257)]

    def residual(K: float) -> float:
        worst = 0.0
        for t in samples:
            r = abs(delta_fn(t) - sum(p(t) * math.exp(-a(t) * K)
                                      for p, a in term_fns))
            if r > worst:
                worst = r
        return worst

    K_best, best = grid_extremum(residual, 1e-12, K_hi, mode="min", n=grid)
    return K_best, best


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    passed: bool
    margin: float
    comparison: str
    horizon_limited: bool = False
    note: str = ""

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "horizon-limited" if self.horizon_limited else "fail"

    def to_json_dict(self) -> dict:
        out = {
            "pass": self.passed,
            "margin": self.margin,
            "comparison": self.comparison,
            "horizon_limited": self.horizon_limited,
        }
        if self.note:
            out["note"] = self.note
        return out


def check_extinction(model: NicholsonModel, stats: AsymptoticStats) -> Verdict:
    """Zero is globally asymptotically stable when sup p/delta <= 1
    (given the decay integral diverges)."""
    return Verdict(passed=stats.gamma <= 1.0, margin=stats.gamma,
                   comparison="<=1", horizon_limited=stats.horizon_limited)


def _a3_slope_test(delta: ScalarField) -> tuple[bool, float]:
    """Quarter-integral growth test for the divergence of the decay integral.

    Splits the scan horizon into four quarters; the cumulative integral is
    judged to grow at least linearly when the last quarter contributes at
    least half of what the first quarter does (and the first is positive).
    """
    lo, hi = delta.scan_interval()
    q = (hi - lo) / 4.0
    first = adaptive_simpson(delta.fn, lo, lo + q, tol=INNER_TOL)
    last = adaptive_simpson(delta.fn, hi - q, hi, tol=INNER_TOL)
    ok = first > 0.0 and last >= 0.5 * first
    ratio = last / first if first > 0.0 else 0.0
    return ok, ratio


def check_A1_A2_A3(model: NicholsonModel,
                   stats: AsymptoticStats) -> dict[str, Verdict]:
    """The standing asymptotic assumptions: ratio bounded away from 1 and
    from infinity, window integral of p finite, decay integral divergent."""
    out: dict[str, Verdict] = {}
    out["A1"] = Verdict(passed=stats.alpha > 1.0 and math.isfinite(stats.gamma),
                        margin=stats.alpha, comparison=">1",
                        horizon_limited=stats.horizon_limited)

    p_view = _p_total_view(model)
    if p_view.kind == "generic":
        # growth trend probe: window sup over first vs last half of horizon
        lo, hi = p_view.scan
        tau = model.tau_bound
        mid = 0.5 * (lo + hi)
        if mid <= lo + tau:
            out["A2"] = Verdict(passed=True, margin=stats.P,
                                comparison="finite", horizon_limited=True,
                                note="scan horizon too short for a trend probe")
        else:
            first = grid_extremum(
                lambda t: adaptive_simpson(p_view.fn, t - tau, t, tol=INNER_TOL),
                lo + tau, mid, mode="max", n=128)[1]
            last = grid_extremum(
                lambda t: adaptive_simpson(p_view.fn, t - tau, t, tol=INNER_TOL),
                mid, hi, mode="max", n=128)[1]
            growing = last > 2.0 * max(first, 1e-300)
            out["A2"] = Verdict(passed=not growing, margin=stats.P,
                                comparison="finite", horizon_limited=True,
                                note="window integral judged on the scan horizon")
    else:
        out["A2"] = Verdict(passed=True, margin=stats.P, comparison="finite")

    if model.delta.kind in ("constant", "periodic"):
        lo, hi = model.delta.scan_interval()
        mean = model.delta.fn(0.0) if lo == hi else \
            adaptive_simpson(model.delta.fn, lo, hi, tol=INNER_TOL) / (hi - lo)
        out["A3"] = Verdict(passed=mean > 0.0, margin=mean, comparison=">0")
    else:
        ok, ratio = _a3_slope_test(model.delta)
        out["A3"] = Verdict(passed=ok, margin=ratio, comparison=">=0.5",
                            horizon_limited=True,
                            note="linear-growth slope test on the scan horizon")
    return out


def permanence_bounds(stats: AsymptoticStats, a_minus: float,
                      a_plus: float) -> tuple[float, float]:
    """Uniform asymptotic bounds for every admissible solution:
    m = log(alpha) exp(-(2D+P))/a_plus, M = log(gamma) exp(2(D+P))/a_minus."""
    if not stats.alpha > 1.0:
        raise CriteriaError(
            f"permanence not certified: liminf p/delta = {stats.alpha} <= 1")
    m = math.log(stats.alpha) * math.exp(-(2.0 * stats.D + stats.P)) / a_plus
    M = math.log(stats.gamma) * math.exp(2.0 * (stats.D + stats.P)) / a_minus
    return m, M


def beta_permanence_bounds(K: float, delta: float, p_sum: float,
                           C: float) -> tuple[float, float]:
    """Factored-form bounds K exp(-(2 delta + p) C), K exp(2 (delta + p) C)."""
    return (K * math.exp(-(2.0 * delta + p_sum) * C),
            K * math.exp(2.0 * (delta + p_sum) * C))


def check_K1(model: NicholsonModel, equilibrium: Optional[tuple[float, float]],
             sup_delta: float) -> Verdict:
    """A positive equilibrium exists when the sup-grid residual is tiny."""
    if equilibrium is None:
        return Verdict(passed=False, margin=math.inf,
                       comparison=f"<{K1_REL_RESIDUAL}*sup_delta",
                       note="no positive equilibrium (sum p <= delta)")
    _, residual = equilibrium
    threshold = K1_REL_RESIDUAL * sup_delta
    return Verdict(passed=residual < threshold, margin=residual,
                   comparison=f"<{K1_REL_RESIDUAL}*sup_delta",
                   note=f"threshold {threshold!r}")


def check_K2(K: float, a_plus: float, zeta_plus: float) -> Verdict:
    if not K > 0.0:
        raise CriteriaError("K must be positive")
    margin = a_plus * K * (math.exp(zeta_plus) - 1.0)
    return Verdict(passed=margin <= 1.0, margin=margin, comparison="<=1")


def check_K2_star(a_minus: float, a_plus: float, gamma: float,
                  zeta_plus: float) -> Verdict:
    if not gamma > 1.0:
        raise CriteriaError("requires sup p/delta > 1")
    margin = (a_plus / a_minus) * (math.exp(zeta_plus) - 1.0) * math.log(gamma)
    return Verdict(passed=margin <= 1.0, margin=margin, comparison="<=1")


def check_H3(K: float, a_plus: float, delta: float,
             beta_zeta_plus: float) -> Verdict:
    """Factored-form attractivity of K: a+ K (exp(delta zeta) - 1) <= 1 with
    zeta the sup of the modulation integral over the sigma windows."""
    margin = a_plus * K * (math.exp(delta * beta_zeta_plus) - 1.0)
    return Verdict(passed=margin <= 1.0, margin=margin, comparison="<=1")


def check_A4(m_star: float, M_star: float, a_plus: float,
             zeta_plus: float) -> Verdict:
    """Attractivity of a fixed solution ranging in [m*, M*]."""
    if not 0.0 < m_star <= M_star:
        raise CriteriaError("need 0 < m_star <= M_star")
    margin = a_plus * M_star * ((M_star / m_star) * math.exp(zeta_plus) - 1.0)
    return Verdict(passed=margin <= 1.0, margin=margin, comparison="<=1")


def check_A5(stats: AsymptoticStats, a_minus: float, a_plus: float) -> Verdict:
    """Global attractivity from the uniform permanence bounds alone (strict)."""
    if not stats.alpha > 1.0:
        raise CriteriaError("requires liminf p/delta > 1")
    log_a = math.log(stats.alpha)
    log_g = math.log(stats.gamma)
    margin = (a_plus / a_minus) * log_g * math.exp(2.0 * (stats.D + stats.P)) \
        * ((a_plus * log_g) / (a_minus * log_a)
           * math.exp(4.0 * stats.D + 3.0 * stats.P + stats.zeta_plus) - 1.0)
    return Verdict(passed=margin < 1.0, margin=margin, comparison="<1",
                   horizon_limited=stats.horizon_limited)


def check_periodic_conditions(model: NicholsonModel, omega: float,
                              grid: int = OUTER_GRID) -> dict[str, Verdict]:
    """Existence-plus-attractivity conditions for an omega-periodic model.

    Uses the periodic-case definitions: D = integral of delta over one
    period, gamma = max of p/delta over one period.  Returns verdicts for
    the pointwise domination condition (periodic1), the contraction margin
    (periodic2) and the integral-mass alternative existence route.
    """
    if omega <= 0.0:
        raise CriteriaError("omega must be positive")
    fields = [model.delta] + [getattr(term, name) for term in model.terms
                              for name in ("p", "a", "tau", "sigma")]
    for f in fields:
        if f.kind == "generic":
            raise CriteriaError(
                f"field {f.source!r} is not periodic; periodic criteria "
                f"need omega-periodic (or constant) fields")
        for k in range(64):
            t = omega * k / 64
            v0, v1 = f.fn(t), f.fn(t + omega)
            if abs(v1 - v0) > 1e-9 * max(1.0, abs(v0)):
                raise CriteriaError(
                    f"field {f.source!r} is not {omega}-periodic")

    delta_fn = model.delta.fn
    p_fn = model.p_total
    D = adaptive_simpson(delta_fn, 0.0, omega, tol=INNER_TOL)
    gamma = grid_extremum(lambda t: p_fn(t) / delta_fn(t), 0.0, omega,
                          mode="max", n=grid)[1]
    a_minus = min(term.a.inf() for term in model.terms)
    a_plus = max(term.a.sup() for term in model.terms)
    stats_zeta = max(
        sliding_window_integral(model.delta, term.sigma, "sup", grid=grid)
        for term in model.terms)

    eD = math.exp(D)
    excess = [p_fn(omega * k / grid) - eD * delta_fn(omega * k / grid)
              for k in range(grid + 1)]
    lo = min(excess)
    hi = max(excess)
    out: dict[str, Verdict] = {}
    out["periodic1"] = Verdict(
        passed=lo >= -PERIODIC1_SLACK and hi > PERIODIC1_SLACK,
        margin=lo, comparison=">=-1e-12 (and not identically equal)",
        note=f"max excess {hi!r}")
    margin2 = (a_plus / a_minus) * eD * math.log(gamma) \
        * (math.exp(D + stats_zeta) - 1.0)
    out["periodic2"] = Verdict(passed=margin2 <= 1.0, margin=margin2,
                               comparison="<=1",
                               note=f"period D={D!r}, period gamma={gamma!r}")
    p_mass = adaptive_simpson(p_fn, 0.0, omega, tol=INNER_TOL)
    threshold = eD * (eD - 1.0)
    out["periodic_alternative"] = Verdict(
        passed=p_mass >= threshold, margin=p_mass / threshold,
        comparison=">=1", note=f"integral {p_mass!r} vs {threshold!r}")
    return out


# ---------------------------------------------------------------------------
# Assembled report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriteriaReport:
    stats: AsymptoticStats
    a_minus: float
    a_plus: float
    sigma_plus: float
    K: Optional[float]
    K_residual: Optional[float]
    m_bound: Optional[float]
    M_bound: Optional[float]
    beta_bounds: Optional[tuple[float, float]]
    verdicts: dict[str, Verdict]
    coefficient_report: CoefficientReport

    def to_json_dict(self) -> dict:
        return {
            "stats": self.stats.to_json_dict(),
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "sigma_plus": self.sigma_plus,
            "K": None if self.K is None else
                {"value": self.K, "residual": self.K_residual},
            "bounds": {
                "m": self.m_bound,
                "M": self.M_bound,
                "beta_form": None if self.beta_bounds is None else
                    {"m": self.beta_bounds[0], "M": self.beta_bounds[1]},
            },
            "verdicts": {name: v.to_json_dict()
                         for name, v in sorted(self.verdicts.items())},
            "coefficients": self.coefficient_report.to_json_dict(),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def build_report(model: NicholsonModel, omega: Optional[float] = None,
                 grid: int = OUTER_GRID) -> CriteriaReport:
    """Evaluate every applicable criterion for the model.

    ``omega`` enables the periodic-existence conditions; when omitted it is
    inferred from the coefficient periods if every field is periodic or
    constant (with at least one periodic).
    """
    coeff = validate_A0(model)
    stats = compute_stats(model, grid=grid)
    equilibrium = solve_equilibrium(model)
    sup_delta = model.delta.sup()

    verdicts: dict[str, Verdict] = {}
    verdicts["extinction"] = check_extinction(model, stats)
    verdicts.update(check_A1_A2_A3(model, stats))
    verdicts["K1"] = check_K1(model, equilibrium, sup_delta)

    K = K_res = None
    if equilibrium is not None and verdicts["K1"].passed:
        K, K_res = equilibrium
        verdicts["K2"] = check_K2(K, coeff.a_plus, stats.zeta_plus)
        if stats.gamma > 1.0:
            verdicts["K2*"] = check_K2_star(coeff.a_minus, coeff.a_plus,
                                            stats.gamma, stats.zeta_plus)
    elif equilibrium is not None:
        K, K_res = equilibrium  # reported with its residual; (K1) failed

    m_bound = M_bound = None
    beta_bounds = None
    if stats.alpha > 1.0:
        m_bound, M_bound = permanence_bounds(stats, coeff.a_minus, coeff.a_plus)
        verdicts["A5"] = check_A5(stats, coeff.a_minus, coeff.a_plus)
        if coeff.sigma_plus == 0.0 and all(
                verdicts[name].passed for name in ("A1", "A2", "A3")):
            # no maturation delay: the sigma-window statistic vanishes and
            # every positive solution is a global attractor
            verdicts["zero_sigma_attractivity"] = Verdict(
                passed=True, margin=coeff.sigma_plus, comparison="==0",
                note="all sigma_j identically zero")

    bf = model.beta_form
    if bf is not None and stats.beta_C is not None:
        K_beta = None
        if bf.p_sum > bf.delta:
            def F(Kc):
                return sum(pj * math.exp(-aj * Kc)
                           for pj, aj in zip(bf.p, bf.a)) - bf.delta
            ratio = math.log(bf.p_sum / bf.delta)
            lo, hi = ratio / max(bf.a), ratio / min(bf.a)
            K_beta = lo if lo == hi else bisect_root(F, lo, hi, ftol=1e-13)
            beta_bounds = beta_permanence_bounds(K_beta, bf.delta, bf.p_sum,
                                                 stats.beta_C)
            verdicts["H3"] = check_H3(K_beta, max(bf.a), bf.delta,
                                      stats.beta_zeta_plus)

    if omega is None:
        omega = _infer_omega(model)
    if omega is not None:
        try:
            verdicts.update(check_periodic_conditions(model, omega, grid=grid))
        except CriteriaError:
            pass  # not periodic after all; skip the periodic verdicts

    return CriteriaReport(stats=stats, a_minus=coeff.a_minus,
                          a_plus=coeff.a_plus, sigma_plus=coeff.sigma_plus,
                          K=K, K_residual=K_res,
                          m_bound=m_bound, M_bound=M_bound,
                          beta_bounds=beta_bounds, verdicts=verdicts,
                          coefficient_report=coeff)


def _infer_omega(model: NicholsonModel) -> Optional[float]:
    fields = [model.delta] + [getattr(term, name) for term in model.terms
                              for name in ("p", "a", "tau", "sigma")]
    if model.beta_form is not None:
        fields.append(model.beta_form.beta)
    periods = []
    for f in fields:
        if f.kind == "generic":
            return None
        if f.kind == "periodic":
            periods.append(f.period)
    if not periods:
        return None
    w = periods[0]
    for other in periods[1:]:
        nxt = _common_period(w, other)
        if nxt is None:
            return None
        w = nxt
    return w
