"""Small deterministic numerical kernels shared across the package.

Everything here is hand-rolled on purpose: the evaluation order is pinned so
that repeated runs over the same inputs produce bit-identical results, which
the report writers rely on.
"""

from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 48) -> float:
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    ``tol`` is an absolute tolerance; subdivision carries the usual factor-15
    Richardson acceptance test.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return sign * _simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth)


def _simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + _simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1))


def golden_section(f: Callable[[float], float], a: float, b: float,
                   mode: str = "max", xtol: float = 1e-10,
                   max_iter: int = 200) -> tuple[float, float]:
    """Locate an extremum of ``f`` on ``[a, b]`` by golden-section search.

    Returns ``(x, f(x))``.  Assumes ``f`` is unimodal on the bracket, which
    holds for the grid-refinement brackets this package feeds it.
    """
    if b < a:
        a, b = b, a
    neg = mode == "min"

    def g(x):
        v = f(x)
        return -v if neg else v

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    gc, gd = g(c), g(d)
    it = 0
    while (b - a) > xtol and it < max_iter:
        if gc > gd:
            b, d, gd = d, c, gc
            c = b - _INVPHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _INVPHI * (b - a)
            gd = g(d)
        it += 1
    x = 0.5 * (a + b)
    v = f(x)
    return x, v


def grid_extremum(f: Callable[[float], float], a: float, b: float,
                  mode: str = "max", n: int = 2048,
                  xtol: float = 1e-10) -> tuple[float, float]:
    """Extremum of ``f`` over ``[a, b]``: dense grid scan + golden refinement.

    Returns ``(argext, value)``.  For ``a == b`` the single point is returned.
    """
    if a == b:
        return a, f(a)
    if b < a:
        raise ValueError(f"empty scan interval [{a}, {b}]")
    want_max = mode == "max"
    h = (b - a) / n
    best_i = 0
    best_v = f(a)
    for i in range(1, n + 1):
        v = f(a + i * h)
        if (v > best_v) if want_max else (v < best_v):
            best_v = v
            best_i = i
    lo = a + max(best_i - 1, 0) * h
    hi = a + min(best_i + 1, n) * h
    x, v = golden_section(f, lo, hi, mode=mode, xtol=xtol)
    # keep the grid value if refinement did not improve on it
    if (v >= best_v) if want_max else (v <= best_v):
        return x, v
    return a + best_i * h, best_v


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                ftol: float = 1e-12, max_iter: int = 400) -> float:
    """Root of a continuous ``f`` with ``f(lo) >= 0 >= f(hi)`` (or flipped).

    Bisection down to ``|f| < ftol`` followed by a short Newton-free secant
    polish; asserts the bracket actually straddles the root.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(
            f"bracket [{lo}, {hi}] does not straddle a root "
            f"(f(lo)={flo!r}, f(hi)={fhi!r})")
    a, b, fa, fb = lo, hi, flo, fhi
    mid = 0.5 * (a + b)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm) < ftol or (b - a) <= abs(mid) * 1e-16 + 5e-324:
            break
        if (fm > 0.0) == (fa > 0.0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    # secant polish for the last digits
    x0, x1 = a, b
    f0, f1 = f(x0), f(x1)
    for _ in range(4):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (min(a, b) <= x2 <= max(a, b)):
            break
        x0, f0, x1, f1 = x1, f1, x2, f(x2)
    return x1 if abs(f1) <= abs(f(mid)) else mid
