"""Model definition, config loading and validation.

The population model integrated and analysed by this package is the scalar
delay equation

    x'(t) = sum_j p_j(t) x(t - tau_j(t)) exp(-a_j(t) x(t - sigma_j(t))) - delta(t) x(t)

with m coefficient/delay tuples.  Coefficients are ScalarFields: a parsed
expression of t plus a declared class (constant / periodic / generic) that
tells the analysis how to take suprema and infima.  Models may additionally
carry a factored form with a common modulation beta(t) and scalar constants,

    x'(t) = beta(t) * (-delta x(t) + sum_j p_j x(t - tau_j(t)) exp(-a_j x(t - sigma_j(t)))),

which unlocks the beta-based permanence and attractivity criteria.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

from . import expr as ex
from .numerics import grid_extremum

VALID_CLASSES = ("constant", "periodic", "generic")

_REL_TOL_PERIODIC = 1e-12   # periodicity check on the validation grid
_BOUND_SLACK = 1e-12        # slack when checking declared bounds


class ModelError(Exception):
    """Base class for model construction and validation failures."""


class SchemaError(ModelError):
    """Config document does not match the expected shape."""


class ValidationError(ModelError):
    """Config parsed but carries inadmissible values."""


# ---------------------------------------------------------------------------
# ScalarField
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarField:
    """A nonnegative function of time with a declared structural class.

    kind:
      * "constant": value does not depend on t,
      * "periodic": f(t + period) == f(t) for the declared period,
      * "generic":  no structure; extrema are taken over the declared scan
        horizon only and downstream verdicts are flagged horizon-limited.
    """

    expression: ex.Expression
    source: str
    kind: str
    period: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    scan: Optional[tuple[float, float]] = None

    @cached_property
    def fn(self) -> Callable[[float], float]:
        return ex.compile_fn(self.expression)

    def __call__(self, t: float) -> float:
        return self.fn(t)

    def scan_interval(self) -> tuple[float, float]:
        """The t-interval over which extrema of this field are taken."""
        if self.kind == "constant":
            return (0.0, 0.0)
        if self.kind == "periodic":
            return (0.0, self.period)
        if self.scan is None:
            raise ValidationError(
                f"generic field {self.source!r} has no scan horizon")
        return self.scan

    def sup(self, n: int = 2048) -> float:
        if self.upper is not None:
            return self.upper
        return self._extremum("max", n)

    def inf(self, n: int = 2048) -> float:
        if self.lower is not None:
            return self.lower
        return self._extremum("min", n)

    def _extremum(self, mode: str, n: int) -> float:
        lo, hi = self.scan_interval()
        if lo == hi:
            return self.fn(lo)
        return grid_extremum(self.fn, lo, hi, mode=mode, n=n)[1]

    def validate(self, grid_points: int = 64) -> None:
        """Check the declared class and bounds against sampled values."""
        if self.kind not in VALID_CLASSES:
            raise ValidationError(
                f"field {self.source!r}: unknown class {self.kind!r}")
        if self.kind == "constant":
            v0 = self.fn(0.0)
            for t in (0.37, 1.0, 2.71, 10.3, -4.2):
                if abs(self.fn(t) - v0) > _REL_TOL_PERIODIC * max(1.0, abs(v0)):
                    raise ValidationError(
                        f"field {self.source!r}: declared constant but "
                        f"varies ({v0!r} at 0 vs {self.fn(t)!r} at {t})")
        if self.kind == "periodic":
            if self.period is None or self.period <= 0.0:
                raise ValidationError(
                    f"field {self.source!r}: periodic class needs period > 0")
            w = self.period
            for k in range(grid_points):
                t = (k / grid_points) * w
                v0 = self.fn(t)
                v1 = self.fn(t + w)
                if abs(v1 - v0) > _REL_TOL_PERIODIC * max(1.0, abs(v0)):
                    raise ValidationError(
                        f"field {self.source!r}: not {w}-periodic at t={t} "
                        f"({v0!r} vs {v1!r})")
        if self.kind == "generic" and self.scan is None:
            raise ValidationError(
                f"field {self.source!r}: generic class needs a scan horizon")
        if self.lower is not None or self.upper is not None:
            for t in self.sample_grid(grid_points):
                v = self.fn(t)
                if self.lower is not None and v < self.lower - _BOUND_SLACK:
                    raise ValidationError(
                        f"field {self.source!r}: sampled value {v} at t={t} "
                        f"below declared lower bound {self.lower}")
                if self.upper is not None and v > self.upper + _BOUND_SLACK:
                    raise ValidationError(
                        f"field {self.source!r}: sampled value {v} at t={t} "
                        f"above declared upper bound {self.upper}")

    def sample_grid(self, n: int = 64) -> list[float]:
        lo, hi = self.scan_interval()
        if lo == hi:
            return [lo]
        return [lo + (hi - lo) * k / n for k in range(n + 1)]

    def to_config(self) -> dict:
        out: dict = {"expr": self.source, "class": self.kind}
        if self.period is not None:
            out["period"] = self.period
        if self.lower is not None:
            out["lower"] = self.lower
        if self.upper is not None:
            out["upper"] = self.upper
        if self.scan is not None:
            out["scan"] = list(self.scan)
        return out


def field_from_config(obj: dict, where: str = "field") -> ScalarField:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected a field object, got {obj!r}")
    allowed = {"expr", "class", "period", "lower", "upper", "scan"}
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(f"{where}: unknown keys {sorted(extra)}")
    if "expr" not in obj:
        raise SchemaError(f"{where}: missing 'expr'")
    if "class" not in obj:
        raise SchemaError(f"{where}: missing 'class'")
    source = obj["expr"]
    try:
        tree = ex.parse(source)
    except ex.ExprSyntaxError as err:
        raise SchemaError(f"{where}: cannot parse {source!r}: {err}") from err
    scan = obj.get("scan")
    if scan is not None:
        if (not isinstance(scan, (list, tuple)) or len(scan) != 2
                or not all(isinstance(v, (int, float)) for v in scan)
                or not scan[0] < scan[1]):
            raise SchemaError(f"{where}: scan must be [T0, T1] with T0 < T1")
        scan = (float(scan[0]), float(scan[1]))
    f = ScalarField(
        expression=tree,
        source=source,
        kind=obj["class"],
        period=None if obj.get("period") is None else float(obj["period"]),
        lower=None if obj.get("lower") is None else float(obj["lower"]),
        upper=None if obj.get("upper") is None else float(obj["upper"]),
        scan=scan,
    )
    try:
        f.validate()
    except ex.ExprDomainError as err:
        raise ValidationError(f"{where}: {err}") from err
    return f


def constant_field(value: float) -> ScalarField:
    """A ScalarField holding a plain number (used by config synthesis)."""
    src = repr(float(value))
    return ScalarField(expression=ex.Num(float(value)), source=src,
                       kind="constant")


def _product_field(scalar: float, base: ScalarField) -> ScalarField:
    tree = ex.Bin("*", ex.Num(float(scalar)), base.expression)
    return ScalarField(
        expression=tree,
        source=f"{float(scalar)!r}*({base.source})",
        kind=base.kind,
        period=base.period,
        scan=base.scan,
        lower=None if base.lower is None else scalar * base.lower,
        upper=None if base.upper is None else scalar * base.upper,
    )


# ---------------------------------------------------------------------------
# Model types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    """One coefficient/delay tuple (p_j, a_j, tau_j, sigma_j)."""
    p: ScalarField
    a: ScalarField
    tau: ScalarField
    sigma: ScalarField


@dataclass(frozen=True)
class BetaForm:
    """Factored shape: common modulation beta(t) and scalar constants."""
    beta: ScalarField
    delta: float
    p: tuple[float, ...]
    a: tuple[float, ...]

    @property
    def p_sum(self) -> float:
        return sum(self.p)


@dataclass(frozen=True)
class NicholsonModel:
    terms: tuple[Term, ...]
    delta: ScalarField
    t0: float
    tau_bound: float
    beta_form: Optional[BetaForm] = None

    @property
    def m(self) -> int:
        return len(self.terms)

    def p_total(self, t: float) -> float:
        return sum(term.p.fn(t) for term in self.terms)

    def to_config(self) -> dict:
        out = {
            "t0": self.t0,
            "delta": self.delta.to_config(),
            "terms": [
                {"p": term.p.to_config(), "a": term.a.to_config(),
                 "tau": term.tau.to_config(), "sigma": term.sigma.to_config()}
                for term in self.terms
            ],
        }
        if self.beta_form is not None:
            out["beta_form"] = {
                "beta": self.beta_form.beta.to_config(),
                "delta": self.beta_form.delta,
                "p": list(self.beta_form.p),
                "a": list(self.beta_form.a),
            }
        return out


@dataclass(frozen=True)
class HistoryFunction:
    """Admissible initial history on [-tau, 0]: nonnegative, positive at 0.

    The expression is written in the variable t, read as the backward offset
    theta in [-tau, 0].
    """
    expression: ex.Expression
    source: str

    @cached_property
    def fn(self) -> Callable[[float], float]:
        return ex.compile_fn(self.expression)

    def __call__(self, theta: float) -> float:
        return self.fn(theta)

    def validate(self, tau: float, grid_points: int = 128) -> None:
        v0 = self.fn(0.0)
        if not v0 > 0.0:
            raise ValidationError(
                f"history {self.source!r}: value at 0 must be positive, "
                f"got {v0!r}")
        if tau > 0.0:
            for k in range(grid_points + 1):
                theta = -tau + tau * k / grid_points
                v = self.fn(theta)
                if v < -_BOUND_SLACK:
                    raise ValidationError(
                        f"history {self.source!r}: negative value {v} "
                        f"at theta={theta}")


def history_from_source(source: str) -> HistoryFunction:
    return HistoryFunction(expression=ex.parse(source), source=source)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

def load_model(document) -> NicholsonModel:
    """Build a validated model from a JSON config.

    ``document`` may be a JSON string or an already-decoded dict.  Schema::

        {"t0": 0.0,
         "delta": FIELD,
         "terms": [{"p": FIELD, "a": FIELD, "tau": FIELD, "sigma": FIELD}, ...],
         "beta_form": {"beta": FIELD, "delta": num, "p": [num...], "a": [num...]}}

    where FIELD = {"expr": str, "class": "constant"|"periodic"|"generic",
    "period"?, "lower"?, "upper"?, "scan"?: [T0, T1]}.  When ``beta_form`` is
    present the general-form ``delta`` and per-term ``p``/``a`` may be
    omitted; they are synthesised as beta(t) times the constants.  If both
    are given they are cross-checked on a sample grid.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as err:
            raise SchemaError(f"not valid JSON: {err}") from err
    if not isinstance(document, dict):
        raise SchemaError(f"expected a JSON object, got {type(document).__name__}")
    allowed = {"t0", "delta", "terms", "beta_form"}
    extra = set(document) - allowed
    if extra:
        raise SchemaError(f"unknown top-level keys {sorted(extra)}")
    if "terms" not in document or not isinstance(document["terms"], list) \
            or len(document["terms"]) == 0:
        raise SchemaError("'terms' must be a non-empty array")

    t0 = float(document.get("t0", 0.0))

    beta_form = None
    if "beta_form" in document:
        bf = document["beta_form"]
        if not isinstance(bf, dict):
            raise SchemaError("'beta_form' must be an object")
        extra = set(bf) - {"beta", "delta", "p", "a"}
        if extra:
            raise SchemaError(f"beta_form: unknown keys {sorted(extra)}")
        for key in ("beta", "delta", "p", "a"):
            if key not in bf:
                raise SchemaError(f"beta_form: missing '{key}'")
        beta = field_from_config(bf["beta"], "beta_form.beta")
        p_consts = tuple(float(v) for v in bf["p"])
        a_consts = tuple(float(v) for v in bf["a"])
        if len(p_consts) != len(document["terms"]) or \
                len(a_consts) != len(document["terms"]):
            raise SchemaError(
                "beta_form: 'p' and 'a' must have one entry per term")
        if any(v <= 0.0 for v in p_consts + a_consts) or float(bf["delta"]) <= 0.0:
            raise ValidationError("beta_form: constants must be positive")
        beta_form = BetaForm(beta=beta, delta=float(bf["delta"]),
                             p=p_consts, a=a_consts)

    if "delta" in document:
        delta = field_from_config(document["delta"], "delta")
        if beta_form is not None:
            _crosscheck_factored(delta, _product_field(beta_form.delta,
                                                       beta_form.beta), "delta")
    elif beta_form is not None:
        delta = _product_field(beta_form.delta, beta_form.beta)
    else:
        raise SchemaError("missing 'delta' (no beta_form to synthesise it)")

    terms = []
    for j, raw in enumerate(document["terms"]):
        where = f"terms[{j}]"
        if not isinstance(raw, dict):
            raise SchemaError(f"{where}: expected an object")
        extra = set(raw) - {"p", "a", "tau", "sigma"}
        if extra:
            raise SchemaError(f"{where}: unknown keys {sorted(extra)}")
        for key in ("tau", "sigma"):
            if key not in raw:
                raise SchemaError(f"{where}: missing '{key}'")
        tau = field_from_config(raw["tau"], f"{where}.tau")
        sigma = field_from_config(raw["sigma"], f"{where}.sigma")
        if "p" in raw:
            p = field_from_config(raw["p"], f"{where}.p")
            if beta_form is not None:
                _crosscheck_factored(
                    p, _product_field(beta_form.p[j], beta_form.beta),
                    f"{where}.p")
        elif beta_form is not None:
            p = _product_field(beta_form.p[j], beta_form.beta)
        else:
            raise SchemaError(f"{where}: missing 'p'")
        if "a" in raw:
            a = field_from_config(raw["a"], f"{where}.a")
            if beta_form is not None:
                _crosscheck_factored(a, constant_field(beta_form.a[j]),
                                     f"{where}.a")
        elif beta_form is not None:
            a = constant_field(beta_form.a[j])
        else:
            raise SchemaError(f"{where}: missing 'a'")
        terms.append(Term(p=p, a=a, tau=tau, sigma=sigma))

    _validate_signs(terms, delta)
    tau_bound = _compute_tau_bound(terms)
    return NicholsonModel(terms=tuple(terms), delta=delta, t0=t0,
                          tau_bound=tau_bound, beta_form=beta_form)


def _crosscheck_factored(given: ScalarField, synth: ScalarField, where: str,
                         rel_tol: float = 1e-9) -> None:
    for t in given.sample_grid(64):
        v0, v1 = given.fn(t), synth.fn(t)
        if abs(v0 - v1) > rel_tol * max(1.0, abs(v0)):
            raise ValidationError(
                f"{where}: value {v0} at t={t} disagrees with the beta_form "
                f"factorisation ({v1})")


def _validate_signs(terms: Sequence[Term], delta: ScalarField) -> None:
    for t in delta.sample_grid(64):
        if delta.fn(t) <= 0.0:
            raise ValidationError(
                f"delta: nonpositive sampled value {delta.fn(t)} at t={t}")
    for j, term in enumerate(terms):
        for name in ("p", "a"):
            f = getattr(term, name)
            for t in f.sample_grid(64):
                if f.fn(t) <= 0.0:
                    raise ValidationError(
                        f"terms[{j}].{name}: nonpositive sampled value "
                        f"{f.fn(t)} at t={t}")
        for name in ("tau", "sigma"):
            f = getattr(term, name)
            for t in f.sample_grid(64):
                if f.fn(t) < 0.0:
                    raise ValidationError(
                        f"terms[{j}].{name}: negative delay {f.fn(t)} at t={t}")


def _compute_tau_bound(terms: Sequence[Term]) -> float:
    worst = 0.0
    for term in terms:
        worst = max(worst, term.tau.sup(), term.sigma.sup())
    if worst < 0.0:
        raise ValidationError("negative delay bound")
    return worst


# ---------------------------------------------------------------------------
# Positivity / boundedness validation report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClauseCheck:
    name: str
    status: str            # "pass" | "fail" | "horizon-limited"
    value: Optional[float] = None
    message: str = ""


@dataclass(frozen=True)
class CoefficientReport:
    """Outcome of the basic positivity/boundedness validation."""
    a_minus: float
    a_plus: float
    sigma_plus: float
    tau_plus: float
    clauses: tuple[ClauseCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.clauses)

    @property
    def horizon_limited(self) -> bool:
        return any(c.status == "horizon-limited" for c in self.clauses)

    def to_json_dict(self) -> dict:
        return {
            "a_minus": self.a_minus,
            "a_plus": self.a_plus,
            "sigma_plus": self.sigma_plus,
            "tau_plus": self.tau_plus,
            "passed": self.passed,
            "clauses": [
                {"name": c.name, "status": c.status, "value": c.value,
                 "message": c.message}
                for c in self.clauses
            ],
        }


def validate_A0(model: NicholsonModel, grid_points: int = 256) -> CoefficientReport:
    """Check the standing positivity/boundedness assumptions numerically.

    Required: p_j, a_j, delta positive; tau_j, sigma_j nonnegative and
    bounded; a_j bounded above and below by positive constants.  For periodic
    fields the grid covers one period; generic fields are judged on their
    declared scan horizon, and a_j bounds that cannot be certified beyond the
    horizon are reported as failures unless declared explicitly.
    """
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    clauses: list[ClauseCheck] = []

    def sampled_min(f: ScalarField) -> float:
        lo, hi = f.scan_interval()
        if lo == hi:
            return f.fn(lo)
        return grid_extremum(f.fn, lo, hi, mode="min", n=grid_points)[1]

    dmin = sampled_min(model.delta)
    clauses.append(ClauseCheck(
        name="delta positive",
        status="pass" if dmin > 0.0 else "fail",
        value=dmin,
        message="" if dmin > 0.0 else "sampled minimum of delta is nonpositive"))

    a_lowers, a_uppers = [], []
    sigma_plus = 0.0
    tau_plus = 0.0
    for j, term in enumerate(model.terms):
        pmin = sampled_min(term.p)
        status = "pass" if pmin > 0.0 else "fail"
        if status == "pass" and term.p.kind == "generic":
            status = "horizon-limited"
        clauses.append(ClauseCheck(
            name=f"p_{j + 1} positive", status=status, value=pmin))

        # lower/upper bounds of a_j: a declared bound certifies a generic
        # field; scanned extrema certify constant/periodic fields only.
        if term.a.kind == "generic" and term.a.lower is None:
            a_lo = sampled_min(term.a)
            clauses.append(ClauseCheck(
                name=f"a_{j + 1} bounded below by a positive constant",
                status="fail", value=a_lo,
                message=f"positive lower bound for a_{j + 1} not established"))
        else:
            a_lo = term.a.inf(grid_points)
            clauses.append(ClauseCheck(
                name=f"a_{j + 1} bounded below by a positive constant",
                status="pass" if a_lo > 0.0 else "fail", value=a_lo,
                message="" if a_lo > 0.0 else
                f"positive lower bound for a_{j + 1} not established"))
        if term.a.kind == "generic" and term.a.upper is None:
            a_hi = grid_extremum(term.a.fn, *term.a.scan_interval(),
                                 mode="max", n=grid_points)[1] \
                if term.a.scan_interval()[0] != term.a.scan_interval()[1] \
                else term.a.fn(0.0)
            clauses.append(ClauseCheck(
                name=f"a_{j + 1} bounded above",
                status="fail", value=a_hi,
                message=f"finite upper bound for a_{j + 1} not established"))
        else:
            a_hi = term.a.sup(grid_points)
            clauses.append(ClauseCheck(
                name=f"a_{j + 1} bounded above", status="pass", value=a_hi))
        a_lowers.append(a_lo)
        a_uppers.append(a_hi)

        for name, f in (("tau", term.tau), ("sigma", term.sigma)):
            fmin = sampled_min(f)
            fmax = f.sup(grid_points)
            status = "pass" if fmin >= 0.0 else "fail"
            if status == "pass" and f.kind == "generic" and f.upper is None:
                status = "horizon-limited"
            clauses.append(ClauseCheck(
                name=f"{name}_{j + 1} nonnegative and bounded",
                status=status, value=fmax,
                message="" if fmin >= 0.0 else "negative sampled delay"))
            if name == "tau":
                tau_plus = max(tau_plus, fmax)
            else:
                sigma_plus = max(sigma_plus, fmax)

    return CoefficientReport(
        a_minus=min(a_lowers),
        a_plus=max(a_uppers),
        sigma_plus=sigma_plus,
        tau_plus=tau_plus,
        clauses=tuple(clauses),
    )


# ---------------------------------------------------------------------------
# Change of variables about a fixed solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformedTerm:
    p: Callable[[float], float]       # P_j(t) = p_j(t) x*(t-tau_j(t)) / x*(t)
    a: Callable[[float], float]       # A_j(t) = a_j(t) x*(t-sigma_j(t))
    tau: ScalarField
    sigma: ScalarField


@dataclass(frozen=True)
class TransformedModel:
    """The equation satisfied by y(t) = x(t)/x*(t) for a fixed solution x*.

    Shares the integrator protocol with NicholsonModel (callable coefficient
    and delay entries), has equilibrium 1, and carries the window statistic
    Z_plus of the transformed decay coefficient.
    """
    terms: tuple[TransformedTerm, ...]
    delta: Callable[[float], float]   # D(t) = sum_j P_j(t) exp(-A_j(t))
    t0: float
    tau_bound: float
    Z_plus: float
    m_star: float
    M_star: float

    @property
    def m(self) -> int:
        return len(self.terms)


def transform_about_solution(model: NicholsonModel, xstar, m_star: float,
                             M_star: float, zeta_plus: Optional[float] = None,
                             tail_fraction: float = 0.2,
                             n_tail_samples: int = 512,
                             t_end: Optional[float] = None) -> TransformedModel:
    """Rescale the model about a fixed positive solution ``xstar``.

    ``xstar`` must expose ``eval_at(t)`` over at least
    ``[model.t0 - tau_bound, t_end]`` and satisfy
    ``m_star <= xstar(t) <= M_star`` there (solutions with unbounded
    coverage, such as locked periodic solutions, are probed over a default
    window).  The transformed decay coefficient is the sum identity
    D(t) = sum_j P_j(t) exp(-A_j(t)), and Z_plus is the tail supremum of

        log(x*(t)/x*(t - sigma_j(t))) + integral of delta over the window,

    maximised over j.  When ``zeta_plus`` is supplied the bound
    Z_plus <= log(M*/m*) + zeta_plus is asserted.
    """
    from .numerics import adaptive_simpson

    t0 = model.t0
    tau = model.tau_bound
    cov_hi = getattr(xstar, "t_max", None)
    cov_lo = getattr(xstar, "t_min", None)
    if cov_hi is None or cov_lo is None:
        raise ValidationError("xstar must expose t_min/t_max coverage")
    if cov_lo > t0 - tau + 1e-12:
        raise ValidationError(
            f"trajectory coverage insufficient: starts at {cov_lo}, "
            f"needs {t0 - tau}")
    t_hi = t_end
    if t_hi is None:
        t_hi = cov_hi if math.isfinite(cov_hi) else \
            t0 + max(20.0 * tau, 20.0)
    elif t_hi > cov_hi:
        raise ValidationError(
            f"trajectory coverage insufficient: ends at {cov_hi}, "
            f"needs {t_hi}")
    t_lo = max(cov_lo, t0 - tau)
    if not (0.0 < m_star <= M_star):
        raise ValidationError("need 0 < m_star <= M_star")

    X = xstar.eval_at
    for k in range(257):
        t = t_lo + (t_hi - t_lo) * k / 256
        v = X(t)
        if v < m_star * (1.0 - 1e-9) or v > M_star * (1.0 + 1e-9):
            raise ValidationError(
                f"positivity bound violated: x*({t}) = {v} outside "
                f"[{m_star}, {M_star}]")

    new_terms = []
    for term in model.terms:
        p_fn, a_fn = term.p.fn, term.a.fn
        tau_fn, sigma_fn = term.tau.fn, term.sigma.fn

        def P(t, p_fn=p_fn, tau_fn=tau_fn):
            return p_fn(t) * X(t - tau_fn(t)) / X(t)

        def A(t, a_fn=a_fn, sigma_fn=sigma_fn):
            return a_fn(t) * X(t - sigma_fn(t))

        new_terms.append(TransformedTerm(p=P, a=A, tau=term.tau,
                                         sigma=term.sigma))

    def D(t):
        return sum(term.p(t) * math.exp(-term.a(t)) for term in new_terms)

    delta_fn = model.delta.fn
    t_tail = max(t0, t_hi - tail_fraction * (t_hi - t0))
    t_tail = max(t_tail, t0 + tau)  # windows must stay inside coverage
    z_plus = -math.inf
    for k in range(n_tail_samples + 1):
        t = t_tail + (t_hi - t_tail) * k / n_tail_samples
        for term in model.terms:
            s = term.sigma.fn(t)
            val = math.log(X(t) / X(t - s)) + adaptive_simpson(
                delta_fn, t - s, t, tol=1e-10)
            if val > z_plus:
                z_plus = val
    if zeta_plus is not None:
        bound = math.log(M_star / m_star) + zeta_plus
        if z_plus > bound + 1e-9:
            raise ValidationError(
                f"transformed window statistic {z_plus} exceeds "
                f"log(M*/m*) + zeta_plus = {bound}")

    return TransformedModel(terms=tuple(new_terms), delta=D, t0=t0,
                            tau_bound=tau, Z_plus=z_plus,
                            m_star=m_star, M_star=M_star)
