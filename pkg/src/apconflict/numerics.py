"""Small numerical routines: adaptive quadrature and derivative-free search."""

from __future__ import annotations

import math

from .errors import DivergenceError


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9,
                     max_depth: int = 30) -> float:
    """Integrate f on [a, b] by adaptive Simpson bisection.

    Each interval is accepted when the classic |S2 - S1| <= 15*tol test
    holds (the Richardson term (S2 - S1)/15 is added to the accepted
    value), otherwise the interval is halved with the tolerance split
    between the halves, down to max_depth levels.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0

    def simpson(fa, fm, fb, width):
        return width / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(fa, fm, fb, b - a)
    return sign * recurse(a, b, fa, fm, fb, whole, tol, 0)


def golden_section_max(f, a: float, b: float, tol: float = 1e-6,
                       max_iter: int = 200) -> float:
    """Locate the maximizer of a unimodal f on [a, b] to within tol."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def bisect_increasing(g, lo: float, hi: float, iterations: int = 100) -> float:
    """Root of an increasing g with g(lo) <= 0 <= g(hi) by plain bisection."""
    glo, ghi = g(lo), g(hi)
    if glo > 0 or ghi < 0:
        raise DivergenceError(f"no sign change on [{lo}, {hi}]")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
