"""The auxiliary one-dimensional map behind the attractivity criteria.

For an equilibrium K > 0, a worst-case coefficient bound a_plus and a factor
theta0 in (0, 1], the decreasing self-map of I = [theta0*K, infinity)

    h(x) = theta0 * K / (1 - g(x) * (1 - theta0)),   g(x) = exp(a_plus*(K - x)),

has K as unique fixed point, derivative h'(K) = -a_plus*K*(1/theta0 - 1) and
constant Schwarzian derivative -(a_plus^2)/2.  Attractivity of K for the
iteration x_{n+1} = h(x_n) rules out sustained oscillation of the delay
equation about its equilibrium; theta0 = exp(-zeta_plus) ties the map to the
sigma-window statistic.

Construction is refused when a_plus*K*(1/theta0 - 1) > 1 (the map may then
have a pole inside I); ``diagnostic=True`` overrides the refusal for
experiments that look for repelling two-cycles, saturating the iteration at
the domain ends where the raw formula leaves I.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import mpmath

_FD_DERIV_STEP = 1e-6      # central difference step for the derivative check
_SCHWARZIAN_STEP = 1e-4    # pinned 5-point stencil step factor
_MP_DPS = 40               # stencil precision; float64 cancels at ~1e-4/step^3


class MapError(Exception):
    pass


class MapConstructionError(MapError):
    """Stability precondition violated and diagnostic mode not requested."""


class MapDomainError(MapError):
    """Argument below the left end of the invariant interval."""


@dataclass(frozen=True)
class MapSpec:
    """Parameters of one map instance.

    ``domain_hi`` caps sweeps and diagnostic saturation (the true domain is
    unbounded; the map sends large arguments straight toward theta0*K, so a
    finite cap loses nothing).  theta0 == 1 is the degenerate zero-window
    limit where the map collapses to the constant K.
    """
    K: float
    a_plus: float
    theta0: float
    domain_hi: float = 0.0
    diagnostic: bool = False

    def __post_init__(self):
        if not self.K > 0.0:
            raise MapConstructionError(f"K must be positive, got {self.K}")
        if not self.a_plus > 0.0:
            raise MapConstructionError(
                f"a_plus must be positive, got {self.a_plus}")
        if not 0.0 < self.theta0 <= 1.0:
            raise MapConstructionError(
                f"theta0 must lie in (0, 1], got {self.theta0}")
        if self.domain_hi <= 0.0:
            object.__setattr__(self, "domain_hi", 100.0 * self.K)
        if self.domain_hi <= self.domain_lo:
            raise MapConstructionError("domain_hi must exceed theta0*K")
        if not self.diagnostic and self.stability_margin > 1.0 + 1e-12:
            raise MapConstructionError(
                f"stability margin a_plus*K*(1/theta0 - 1) = "
                f"{self.stability_margin} exceeds 1; pass diagnostic=True "
                f"to build the map anyway")
        if not self.diagnostic and not self.degenerate:
            # finiteness of h on the whole interval
            pole_check = (1.0 - self.theta0) * math.exp(
                self.a_plus * self.K * (1.0 - self.theta0))
            if not pole_check < 1.0:
                raise MapConstructionError(
                    "map not finite on its interval (pole check failed)")

    @property
    def domain_lo(self) -> float:
        return self.theta0 * self.K

    @property
    def degenerate(self) -> bool:
        return self.theta0 == 1.0

    @property
    def stability_margin(self) -> float:
        return self.a_plus * self.K * (1.0 / self.theta0 - 1.0)


def from_zeta(K: float, a_plus: float, zeta_plus: float,
              domain_hi: float = 0.0, diagnostic: bool = False) -> MapSpec:
    """Build the map with theta0 = exp(-zeta_plus).

    Refuses construction when a_plus*K*(exp(zeta_plus) - 1) > 1 unless
    diagnostic mode is requested; zeta_plus == 0 yields the degenerate
    constant map.
    """
    if zeta_plus < 0.0:
        raise MapConstructionError("zeta_plus must be nonnegative")
    theta0 = 1.0 if zeta_plus == 0.0 else math.exp(-zeta_plus)
    return MapSpec(K=K, a_plus=a_plus, theta0=theta0, domain_hi=domain_hi,
                   diagnostic=diagnostic)


# ---------------------------------------------------------------------------
# Point evaluation
# ---------------------------------------------------------------------------

def g_eval(spec: MapSpec, x: float) -> float:
    """g(x) = exp(a_plus * (K - x)) for x > 0."""
    if not x > 0.0:
        raise MapDomainError(f"g needs x > 0, got {x}")
    return math.exp(spec.a_plus * (spec.K - x))


def h_eval(spec: MapSpec, x: float) -> float:
    """h(x) on [theta0*K, infinity); strictly decreasing with h(K) = K."""
    if x < spec.domain_lo - 1e-12 * max(1.0, spec.domain_lo):
        raise MapDomainError(
            f"x={x} below the interval start {spec.domain_lo}")
    if spec.degenerate:
        return spec.K
    denom = 1.0 - g_eval(spec, x) * (1.0 - spec.theta0)
    if denom <= 0.0:
        if spec.diagnostic:
            return spec.domain_hi  # monotone saturation past the pole
        raise MapError(
            f"map has a pole at or before x={x}; spec invariants violated")
    value = spec.domain_lo / denom
    if spec.diagnostic and value > spec.domain_hi:
        return spec.domain_hi
    return value


def frak_h(K: float, a_plus: float, zeta_plus: float, x: float) -> float:
    """One-call evaluation of the zeta-parametrised map at x."""
    return h_eval(from_zeta(K, a_plus, zeta_plus), x)


def _h_mp(spec: MapSpec, x) -> mpmath.mpf:
    # high-precision twin of h_eval for finite-difference stencils
    K = mpmath.mpf(spec.K)
    theta0 = mpmath.mpf(spec.theta0)
    g = mpmath.e ** (mpmath.mpf(spec.a_plus) * (K - x))
    return theta0 * K / (1 - g * (1 - theta0))


def derivative_at_K(spec: MapSpec, check: bool = True) -> float:
    """h'(K) = -a_plus*K*(1/theta0 - 1), cross-checked by central differences.

    The finite-difference check (1e-6 relative) is skipped for nearly
    degenerate maps where the derivative underflows the check's resolution.
    """
    value = -spec.stability_margin
    if check and not spec.degenerate and abs(value) > 1e-8:
        with mpmath.workdps(_MP_DPS):
            step = mpmath.mpf(_FD_DERIV_STEP) * max(1.0, abs(spec.K))
            K = mpmath.mpf(spec.K)
            fd = (_h_mp(spec, K + step) - _h_mp(spec, K - step)) / (2 * step)
            fd = float(fd)
        if abs(fd - value) > 1e-6 * abs(value):
            raise MapError(
                f"derivative check failed: closed form {value} vs "
                f"finite difference {fd}")
    return value


def _schwarzian_fd(spec: MapSpec, xm, d):
    f_m2 = _h_mp(spec, xm - 2 * d)
    f_m1 = _h_mp(spec, xm - d)
    f_0 = _h_mp(spec, xm)
    f_p1 = _h_mp(spec, xm + d)
    f_p2 = _h_mp(spec, xm + 2 * d)
    d1 = (-f_p2 + 8 * f_p1 - 8 * f_m1 + f_m2) / (12 * d)
    d2 = (-f_p2 + 16 * f_p1 - 30 * f_0 + 16 * f_m1 - f_m2) / (12 * d * d)
    d3 = (f_p2 - 2 * f_p1 + 2 * f_m1 - f_m2) / (2 * d ** 3)
    if d1 == 0:
        raise MapError("derivative vanishes inside the stencil")
    return d3 / d1 - mpmath.mpf(3) / 2 * (d2 / d1) ** 2


def schwarzian(spec: MapSpec, x: float) -> float:
    """Numeric Schwarzian derivative h'''/h' - 1.5*(h''/h')^2 at x.

    Five-point central differences with step 1e-4*max(1, |x|), sharpened by
    one Richardson level (the same stencil at half the step) to keep the
    O(step^2) truncation inside the 1e-4 contract even where the map is
    steep.  Stencil values are taken at >= 40-digit precision because the
    third difference cancels about twelve decimal digits, which double
    precision cannot absorb.
    """
    if spec.degenerate:
        raise MapError("Schwarzian undefined for the constant map")
    if x <= spec.domain_lo:
        raise MapDomainError(f"x={x} not interior to the interval")
    step = _SCHWARZIAN_STEP * max(1.0, abs(x))
    # far past K the map flattens like exp(-a_plus*x); the stencil needs
    # enough digits to resolve differences of that size
    extra = int(spec.a_plus * max(0.0, x - spec.K) / math.log(10.0)) + 10
    with mpmath.workdps(_MP_DPS + extra):
        d = mpmath.mpf(step)
        xm = mpmath.mpf(x)
        coarse = _schwarzian_fd(spec, xm, d)
        fine = _schwarzian_fd(spec, xm, d / 2)
        return float((4 * fine - coarse) / 3)


# ---------------------------------------------------------------------------
# Iteration
# ---------------------------------------------------------------------------

VERDICT_CONVERGED = "converged-to-K"
VERDICT_TWO_CYCLE = "two-cycle-detected"
VERDICT_MAX_ITER_CONVERGING = "max-iterations-converging"
VERDICT_MAX_ITER_STALLED = "max-iterations-stalled"


@dataclass(frozen=True)
class OrbitResult:
    verdict: str
    n_iterations: int
    final_x: float
    orbit: tuple[float, ...] = field(repr=False, default=())

    @property
    def converging(self) -> bool:
        return self.verdict in (VERDICT_CONVERGED, VERDICT_MAX_ITER_CONVERGING)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,x_n\n")
            for n, x in enumerate(self.orbit):
                fh.write(f"{n},{x:.17g}\n")


def iterate(spec: MapSpec, x0: float, max_n: int = 1_000_000,
            tol: float = 1e-8, orbit_prefix: int = 256) -> OrbitResult:
    """Iterate x_{n+1} = h(x_n) from x0 and classify the orbit.

    ``converged-to-K`` means |x_n - K| < tol.  A two-cycle is flagged when
    the stride-two difference collapses below tol while consecutive iterates
    stay more than 10*tol apart AND the consecutive gap has stopped
    shrinking (a genuine cycle keeps its diameter; at the neutral stability
    boundary the gap still decays, only algebraically, so slow convergence
    is not mistaken for a cycle).  Hitting max_n is split into "converging"
    (gap envelope still shrinking) and "stalled".
    """
    if x0 < spec.domain_lo - 1e-12 * max(1.0, spec.domain_lo):
        raise MapDomainError(f"seed {x0} below the interval start")
    K = spec.K
    orbit = [x0]
    x_p = None    # x_{n-1}
    x = x0
    gaps: deque[float] = deque(maxlen=8192)
    for n in range(max_n):
        if abs(x - K) < tol:
            return OrbitResult(VERDICT_CONVERGED, n, x, tuple(orbit))
        x_next = h_eval(spec, x)
        if not spec.diagnostic and \
                x_next < spec.domain_lo - 1e-12 * max(1.0, spec.domain_lo):
            raise MapError(
                f"orbit escaped the interval at step {n} (x={x_next})")
        if len(orbit) < orbit_prefix:
            orbit.append(x_next)
        gap = abs(x_next - x)
        if x_p is not None and abs(x_next - x_p) < tol and gap > 10.0 * tol:
            ref = gaps[-65] if len(gaps) >= 65 else gaps[0]
            if gap >= ref * (1.0 - 1e-6):
                return OrbitResult(VERDICT_TWO_CYCLE, n + 1, x_next,
                                   tuple(orbit))
        gaps.append(gap)
        x_p, x = x, x_next
    # max iterations: classify by the envelope of consecutive gaps
    half = len(gaps) // 2
    tail = list(gaps)[half:]
    earlier = list(gaps)[:half]
    if earlier and tail and \
            sum(tail) / len(tail) < (1.0 - 1e-5) * sum(earlier) / len(earlier):
        verdict = VERDICT_MAX_ITER_CONVERGING
    else:
        verdict = VERDICT_MAX_ITER_STALLED
    return OrbitResult(verdict, max_n, x, tuple(orbit))


@dataclass(frozen=True)
class SweepResult:
    passed: bool
    n_seeds: int
    verdict_counts: dict[str, int]
    failures: tuple[float, ...]   # seeds whose orbit did not converge

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_seeds": self.n_seeds,
            "verdicts": dict(sorted(self.verdict_counts.items())),
            "failing_seeds": list(self.failures),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def global_attractor_sweep(spec: MapSpec, n_seeds: int = 64,
                           max_n: int = 1_000_000,
                           tol: float = 1e-8) -> SweepResult:
    """Iterate from log-spaced seeds across the interval; pass iff every
    orbit converges to K (envelope-shrinking max-iteration orbits count)."""
    if n_seeds < 2:
        raise ValueError("need at least two seeds")
    lo = spec.domain_lo * (1.0 + 1e-9)
    hi = spec.domain_hi
    log_lo, log_hi = math.log(lo), math.log(hi)
    counts: dict[str, int] = {}
    failures: list[float] = []
    for i in range(n_seeds):
        seed = math.exp(log_lo + (log_hi - log_lo) * i / (n_seeds - 1))
        result = iterate(spec, seed, max_n=max_n, tol=tol, orbit_prefix=4)
        counts[result.verdict] = counts.get(result.verdict, 0) + 1
        if not result.converging:
            failures.append(seed)
    return SweepResult(passed=not failures, n_seeds=n_seeds,
                       verdict_counts=counts, failures=tuple(failures))
