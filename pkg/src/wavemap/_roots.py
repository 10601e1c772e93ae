"""Bracketed bisection + Newton root finding, scalar and vectorized.

Everything in the chart reduces to "find the root of a monotone function of
one variable" (usually in log space).  Bisection gives the guarantee, a few
Newton steps give the last digits.
"""
import numpy as np


class BracketError(ValueError):
    """Raised when a root is not bracketed by the supplied interval."""


def bisect_newton(f, lo, hi, fprime=None, xtol=1e-14, rtol=4e-16, maxiter=200):
    """Scalar hybrid root finder on [lo, hi].

    Keeps a sign-changing bracket at all times; a Newton step is taken only
    when it stays strictly inside the bracket, otherwise we bisect.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = f(x)
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if abs(hi - lo) <= xtol + rtol * abs(x):
            return x
        step = None
        if fprime is not None:
            d = fprime(x)
            if d != 0.0 and np.isfinite(d):
                xn = x - fx / d
                if lo < xn < hi:
                    step = xn
        x = step if step is not None else 0.5 * (lo + hi)
    return x


def bisect_vec(f, lo, hi, fprime=None, iters=64, polish=3):
    """Vectorized bisection for arrays of independent monotone problems.

    f is evaluated elementwise on arrays of the same shape as lo/hi.  The
    sign of f at lo must differ from the sign at hi for every element.
    Returns the midpoints after `iters` halvings, followed by `polish`
    guarded Newton steps when fprime is given.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    flo = f(lo)
    fhi = f(hi)
    bad = np.sign(flo) == np.sign(fhi)
    bad &= (flo != 0) & (fhi != 0)
    if np.any(bad):
        idx = np.flatnonzero(bad)[:5]
        raise BracketError(f"{bad.sum()} unbracketed roots, e.g. lo={lo.flat[idx]}, hi={hi.flat[idx]}")
    slo = np.sign(flo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        same = np.sign(fm) == slo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    x = 0.5 * (lo + hi)
    if fprime is not None:
        for _ in range(polish):
            d = fprime(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - f(x) / d
            ok = np.isfinite(xn) & (xn >= lo) & (xn <= hi)
            x = np.where(ok, xn, x)
    return x


def expand_bracket(f, lo, hi, decreasing=True, step=1.0, max_expand=200):
    """Widen [lo, hi] elementwise until f changes sign across it.

    For a decreasing f we need f(lo) > 0 > f(hi).  Steps grow geometrically.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    sgn = 1.0 if decreasing else -1.0
    s = step
    for _ in range(max_expand):
        need = sgn * f(lo) <= 0
        if not np.any(need):
            break
        lo = np.where(need, lo - s, lo)
        s *= 2
    else:
        raise BracketError("could not expand lower bracket")
    s = step
    for _ in range(max_expand):
        need = sgn * f(hi) >= 0
        if not np.any(need):
            break
        hi = np.where(need, hi + s, hi)
        s *= 2
    else:
        raise BracketError("could not expand upper bracket")
    return lo, hi
