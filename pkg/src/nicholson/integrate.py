"""Fixed-step integration of the delay equation with dense output.

The stepper is classical 4-stage Runge-Kutta on a fixed grid.  Delayed
arguments are resolved through cubic Hermite interpolation of the stored
nodes (t_i, x_i, x'_i); the pre-history is evaluated lazily from the supplied
history function.  When a delayed argument lands inside the step currently
being computed (vanishing or sub-step delays), the step is solved by
fixed-point correction: predict with the previous Hermite segment
extrapolated, re-evaluate, and iterate until successive step results agree to
1e-12 relative (at most 8 sweeps).

Positivity is enforced at nodes: a step producing a nonpositive value is
retried at half the width, up to six halvings, after which the run aborts
rather than clamping.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Callable, Optional

from .model import HistoryFunction, ValidationError

_FP_REL_TOL = 1e-12      # fixed-point acceptance between sweeps
_FP_HARD_TOL = 1e-6      # beyond this after 8 sweeps the step is rejected
_MAX_HALVINGS = 6


class IntegratorError(Exception):
    pass


class OutOfRangeError(IntegratorError):
    """Dense-output lookup outside the covered time range."""


class PositivityError(IntegratorError):
    """Solution left the positive cone even at the smallest step."""


class FixedPointError(IntegratorError):
    """Sub-step delay correction did not settle."""


def _hermite(t, t0, x0, d0, t1, x1, d1):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    return ((2.0 * s3 - 3.0 * s2 + 1.0) * x0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * x1
            + (s3 - s2) * h * d1)


def _hermite_deriv(t, t0, x0, d0, t1, x1, d1):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    return ((6.0 * s2 - 6.0 * s) * x0 / h
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * x1 / h
            + (3.0 * s2 - 2.0 * s) * d1)


class Trajectory:
    """Dense-output solution: nodes (t_i, x_i, x'_i) + lazy pre-history.

    Node times are strictly increasing and every node value is positive.
    ``eval_at`` interpolates with the cubic Hermite of the enclosing segment,
    is exact at nodes, and falls back to the history function on
    [t0 - tau, t0].
    """

    def __init__(self, t0: float, tau: float,
                 history: Callable[[float], float]):
        self.t0 = t0
        self.tau = tau
        self.history = history
        self.ts: list[float] = []
        self.xs: list[float] = []
        self.ds: list[float] = []

    # -- coverage ----------------------------------------------------------
    @property
    def t_min(self) -> float:
        return self.t0 - self.tau

    @property
    def t_max(self) -> float:
        return self.ts[-1] if self.ts else self.t0

    def _append(self, t: float, x: float, d: float) -> None:
        if self.ts and t <= self.ts[-1]:
            raise IntegratorError("node times must increase")
        self.ts.append(t)
        self.xs.append(x)
        self.ds.append(d)

    # -- dense output ------------------------------------------------------
    def eval_at(self, t: float) -> float:
        if t <= self.t0:
            if t < self.t_min - 1e-9 * max(1.0, abs(self.t_min)) - 1e-12:
                raise OutOfRangeError(
                    f"t={t} precedes the history window [{self.t_min}, ...]")
            return self.history(max(t, self.t_min) - self.t0)
        ts = self.ts
        if not ts:
            raise OutOfRangeError(f"t={t} beyond computed range")
        last = ts[-1]
        if t >= last:
            if t <= last + 1e-9 * max(1.0, abs(last)):
                return self.xs[-1]
            raise OutOfRangeError(f"t={t} beyond computed range (t_max={last})")
        i = bisect_right(ts, t) - 1
        if i < 0:
            # t in (t0, ts[0]): only possible before the first node is laid
            raise OutOfRangeError(f"t={t} precedes the first node")
        return _hermite(t, ts[i], self.xs[i], self.ds[i],
                        ts[i + 1], self.xs[i + 1], self.ds[i + 1])

    def derivative_at(self, t: float) -> float:
        ts = self.ts
        if t <= self.t0 or not ts:
            raise OutOfRangeError("derivative available on computed range only")
        if t >= ts[-1]:
            if t <= ts[-1] + 1e-9 * max(1.0, abs(ts[-1])):
                return self.ds[-1]
            raise OutOfRangeError(f"t={t} beyond computed range")
        i = bisect_right(ts, t) - 1
        return _hermite_deriv(t, ts[i], self.xs[i], self.ds[i],
                              ts[i + 1], self.xs[i + 1], self.ds[i + 1])

    # -- exports -----------------------------------------------------------
    def nodes(self) -> tuple[list[float], list[float]]:
        return list(self.ts), list(self.xs)

    def write_csv(self, path, stride: int = 1) -> None:
        """Write ``t,x`` rows at full precision, every ``stride``-th node."""
        if stride < 1:
            raise ValueError("stride must be >= 1")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,x\n")
            n = len(self.ts)
            for i in range(0, n, stride):
                fh.write(f"{self.ts[i]:.17g},{self.xs[i]:.17g}\n")
            if n and (n - 1) % stride != 0:
                fh.write(f"{self.ts[-1]:.17g},{self.xs[-1]:.17g}\n")


def _as_history(history, tau: float) -> Callable[[float], float]:
    if isinstance(history, HistoryFunction):
        history.validate(tau)
        return history.fn
    if callable(history):
        fn = history
        v0 = fn(0.0)
        if not v0 > 0.0:
            raise ValidationError(f"history value at 0 must be positive, got {v0!r}")
        if tau > 0.0:
            for k in range(129):
                v = fn(-tau + tau * k / 128)
                if v < -1e-12:
                    raise ValidationError(f"history negative at theta={-tau + tau * k / 128}")
        return fn
    raise TypeError("history must be a HistoryFunction or a callable of theta")


def _make_stage_rhs(model) -> Callable:
    """rhs(t, x_now, lookup) with the per-term field functions bound locally."""
    entries = []
    for term in model.terms:
        entries.append((
            getattr(term.p, "fn", term.p),
            getattr(term.a, "fn", term.a),
            getattr(term.tau, "fn", term.tau),
            getattr(term.sigma, "fn", term.sigma),
        ))
    delta_fn = getattr(model.delta, "fn", model.delta)
    exp = math.exp

    def stage_rhs(t, x_now, lookup):
        acc = -delta_fn(t) * x_now
        for p_fn, a_fn, tau_fn, sigma_fn in entries:
            acc += (p_fn(t) * lookup(t - tau_fn(t))
                    * exp(-a_fn(t) * lookup(t - sigma_fn(t))))
        return acc

    return stage_rhs


def rhs(model, t: float, lookup: Callable[[float], float]) -> float:
    """Right-hand side with every state value drawn through ``lookup``."""
    return _make_stage_rhs(model)(t, lookup(t), lookup)


def integrate(model, history, t_end: float, step: float = 0.01,
              max_halvings: int = _MAX_HALVINGS) -> Trajectory:
    """Integrate the model from an admissible history up to ``t_end``.

    ``model`` needs ``terms`` (entries with callable p/a/tau/sigma), a
    callable ``delta``, ``t0`` and ``tau_bound``; both NicholsonModel and
    TransformedModel qualify.  ``history`` is a HistoryFunction or a callable
    of theta in [-tau, 0].
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    t0 = model.t0
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    tau = model.tau_bound
    hist = _as_history(history, tau)
    traj = Trajectory(t0, tau, hist)
    f = _make_stage_rhs(model)

    x0 = hist(0.0)
    d0 = f(t0, x0, traj.eval_at)
    traj._append(t0, x0, d0)

    t, x, d = t0, x0, d0
    k = 0
    eps = 1e-12 * max(1.0, abs(t_end))
    while t < t_end - eps:
        k += 1
        t_target = min(t0 + k * step, t_end)
        if t_target <= t:
            continue
        t, x, d = _advance(traj, f, t, x, d, t_target, max_halvings)
    return traj


def _advance(traj: Trajectory, f, t, x, d, t_target, halvings_left):
    x_new, d_new = _rk4_step(traj, f, t, x, d, t_target - t)
    if x_new <= 0.0:
        if halvings_left <= 0:
            raise PositivityError(
                f"nonpositive value {x_new} at t={t_target} even at the "
                f"smallest step; the step size is too coarse for this model")
        mid = 0.5 * (t + t_target)
        tm, xm, dm = _advance(traj, f, t, x, d, mid, halvings_left - 1)
        return _advance(traj, f, tm, xm, dm, t_target, halvings_left - 1)
    traj._append(t_target, x_new, d_new)
    return t_target, x_new, d_new


def _rk4_step(traj: Trajectory, f, t, x, d, h):
    ts, xs, ds = traj.ts, traj.xs, traj.ds
    t_half = t + 0.5 * h
    t_next = t + h

    # predictor for lookups inside (t, t+h]: previous segment extrapolated,
    # or the tangent line on the very first step
    if len(ts) >= 2:
        a0, a1 = len(ts) - 2, len(ts) - 1
        seg = (ts[a0], xs[a0], ds[a0], ts[a1], xs[a1], ds[a1])

        def prov(s, seg=seg):
            return _hermite(s, *seg)
    else:
        def prov(s):
            return x + d * (s - t)

    used_future = False
    eps = 1e-13 * max(1.0, abs(t_next))

    def lookup(s):
        nonlocal used_future
        if s <= t + eps:
            return traj.eval_at(s)
        used_future = True
        return prov(s)

    x_prev = None
    x_new = d_new = None
    for sweep in range(8):
        used_future = False
        k1 = d
        k2 = f(t_half, x + 0.5 * h * k1, lookup)
        k3 = f(t_half, x + 0.5 * h * k2, lookup)
        k4 = f(t_next, x + h * k3, lookup)
        x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        d_new = f(t_next, x_new, lookup)
        if not used_future:
            return x_new, d_new
        if x_prev is not None and \
                abs(x_new - x_prev) <= _FP_REL_TOL * max(1.0, abs(x_new)):
            return x_new, d_new
        x_prev = x_new
        seg = (t, x, d, t_next, x_new, d_new)

        def prov(s, seg=seg):
            return _hermite(s, *seg)

    if abs(x_new - x_prev) > _FP_HARD_TOL * max(1.0, abs(x_new)):
        raise FixedPointError(
            f"sub-step delay correction did not settle at t={t} "
            f"(last change {abs(x_new - x_prev)!r})")
    return x_new, d_new
