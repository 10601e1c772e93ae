"""Nonlinear blowup coordinates y(x; mu, alpha, beta).

For x <= x_cr the new variable solves

    y = x - (mu/2) x^3 A,          A = ln( sqrt(mu)/beta * y^alpha * x^(1-alpha) ),

and for x > x_cr it is the larger root of

    y = 2 y_cr - x + (mu/2) x^3 A.

(x_cr, y_cr) is where the right-hand side of the first line is stationary in
x.  Writing L = ln(gamma) the critical data are

    x_cr = sqrt(2/mu) (3L + 1 - alpha)^(-1/2)
    y_cr = sqrt(2/mu) (2L + 1 - alpha) / (3L + 1 - alpha)^(3/2)

with gamma fixed by (alpha, beta) alone.  Shorthands used throughout:

    X = 1 + alpha mu x^3 / (2y),  Z = 2 - X,
    Y = 1 - (mu x^2 / 2)(3A + 1 - alpha)  (= d/dx of the first-line rhs at fixed y)

so that dy/dx = Y/X below x_cr and -Y/Z above.

Everything is exactly self-similar in mu: with (x, y) -> sqrt(mu) (x, y) mu
drops out, so mu only sets the overall scale.
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy.optimize import brentq

from ._roots import BracketError, bisect_newton, bisect_vec, expand_bracket


class ChartError(ValueError):
    pass


# ---------------------------------------------------------------------------
# gamma and the critical point

def gamma_residual(L, alpha, beta):
    """ln(gamma) - ln(2)/2 + (1/2+alpha) ln(3L+1-alpha) - alpha ln(2L+1-alpha) + ln(beta)."""
    return (L - 0.5 * math.log(2.0) + (0.5 + alpha) * math.log(3 * L + (1 - alpha))
            - alpha * math.log(2 * L + (1 - alpha)) + math.log(beta))


def _solve_v(alpha, beta):
    """v = 3 ln(gamma) + 1 - alpha > 0, found by bisection/Newton in ln v.

    Working in v avoids cancellation at the branch edge ln(gamma) -> -(1-alpha)/3.
    The residual, as a function of L, has slope > 1 and runs from -inf to
    +inf on the branch, so the root is unique.
    """
    if not (0.0 <= alpha <= 1.0) or beta <= 0:
        raise ChartError(f"need 0 <= alpha <= 1 and beta > 0, got {alpha}, {beta}")
    m = 1.0 - alpha
    c = -0.5 * math.log(2.0) + math.log(beta) + alpha * math.log(3.0)

    def r(t):
        v = math.exp(t)
        return (v - m) / 3.0 + c + (0.5 + alpha) * t - alpha * math.log(2 * v + m)

    def dr(t):
        v = math.exp(t)
        return v / 3.0 + 0.5 + alpha - alpha * 2 * v / (2 * v + m)

    lo, hi = -1.0, 1.0
    while r(lo) >= 0:
        lo = 2 * lo - 1.0
        if lo < -1400:
            raise ChartError("gamma root not bracketed")
    while r(hi) <= 0:
        hi = 2 * hi + 1.0
        if hi > 50:
            raise ChartError("gamma root not bracketed")
    return math.exp(bisect_newton(r, lo, hi, fprime=dr, xtol=1e-16))


def solve_gamma(alpha, beta):
    """Root gamma of the critical-point equation on ln(gamma) > -(1-alpha)/3."""
    v = _solve_v(alpha, beta)
    return math.exp((v - (1.0 - alpha)) / 3.0)


def beta_max(alpha):
    """Largest beta with Z_cr > 0 (equivalently ln gamma > alpha - 1/2).

    For alpha <= 1/4 every beta > 0 qualifies and inf is returned.
    """
    if alpha <= 0.25:
        return math.inf
    return math.sqrt(2.0) * math.exp(0.5 - alpha) * alpha ** alpha / (2 * alpha - 0.5) ** (0.5 + alpha)


@dataclass(frozen=True)
class CriticalData:
    gamma: float
    x_cr: float
    y_cr: float
    X_cr: float
    Z_cr: float

    @property
    def admissible(self):
        """The greater root above x_cr joins continuously onto y_cr only if Z_cr > 0."""
        return self.Z_cr > 0


@dataclass(frozen=True)
class CoordParams:
    mu: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ChartError("alpha must lie in [0, 1]")
        if self.beta <= 0 or self.mu <= 0:
            raise ChartError("beta and mu must be positive")

    @cached_property
    def critical(self):
        return critical_point(self)

    @property
    def log_c(self):
        return 0.5 * math.log(self.mu) - math.log(self.beta)


def critical_point(params):
    a = params.alpha
    v = _solve_v(a, params.beta)
    g = math.exp((v - (1.0 - a)) / 3.0)
    s = math.sqrt(2.0 / params.mu)
    w = (2 * v + (1 - a)) / 3.0        # 2 ln(gamma) + 1 - alpha
    x_cr = s / math.sqrt(v)
    y_cr = s * w / v ** 1.5
    # alpha mu x^3/(2y) at the critical point reduces to alpha/(2L+1-alpha)
    q = a / w
    return CriticalData(g, x_cr, y_cr, 1.0 + q, 1.0 - q)


# ---------------------------------------------------------------------------
# the map

def log_A(x, y, params):
    a = params.alpha
    return params.log_c + a * np.log(y) + (1 - a) * np.log(x)


def lower_rhs(x, y, params):
    return x - 0.5 * params.mu * x ** 3 * log_A(x, y, params)


def upper_rhs(x, y, params):
    return 2 * params.critical.y_cr - x + 0.5 * params.mu * x ** 3 * log_A(x, y, params)


def _as_array(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ChartError("x must be positive")
    return x


def _solve_lower_y(x, p):
    a, mu = p.alpha, p.mu
    c0 = p.log_c + (1 - a) * np.log(x)
    k = 0.5 * mu * x ** 3
    if a == 0.0:
        return x - k * c0

    def G(s):
        return x - k * (c0 + a * s) - np.exp(s)

    def dG(s):
        return -k * a - np.exp(s)

    lx = np.log(x)
    lo, hi = expand_bracket(G, lx - 1.0, np.minimum(lx, math.log(p.critical.y_cr)) + 1e-3,
                            decreasing=True)
    return np.exp(bisect_vec(G, lo, hi, fprime=dG))


def _solve_upper_y(x, p):
    a, mu = p.alpha, p.mu
    c0 = p.log_c + (1 - a) * np.log(x)
    k = 0.5 * mu * x ** 3
    ycr = p.critical.y_cr
    if a == 0.0:
        return 2 * ycr - x + k * c0

    def H(s):
        return 2 * ycr - x + k * (c0 + a * s) - np.exp(s)

    def dH(s):
        return k * a - np.exp(s)

    s_star = np.log(a * k)          # maximum of the concave residual
    h_star = H(s_star)
    if np.any(h_star <= 0):
        bad = x[h_star <= 0][:3]
        raise ChartError(f"upper equation has no root at x = {bad} (x_cr = {p.critical.x_cr:.6g})")
    lo = s_star
    hi = np.maximum(s_star, np.log(np.maximum(2 * ycr, x))) + 1.0
    hi = _expand_up(H, hi, -1.0)
    return np.exp(bisect_vec(H, lo, hi, fprime=dH))


def _expand_up(f, hi, sign, max_expand=200):
    # push hi upward until sign * f(hi) > 0
    step = 1.0
    for _ in range(max_expand):
        need = sign * f(hi) <= 0
        if not np.any(need):
            return hi
        hi = np.where(need, hi + step, hi)
        step *= 2
    raise BracketError("could not expand upper bracket")


def map_x_to_y(x, params):
    """y(x) and a boolean mask `upper` (True where x > x_cr)."""
    x = _as_array(x)
    xs = np.atleast_1d(x)
    cr = params.critical
    upper = xs > cr.x_cr
    y = np.empty_like(xs)
    if np.any(~upper):
        y[~upper] = _solve_lower_y(xs[~upper], params)
    if np.any(upper):
        y[upper] = _solve_upper_y(xs[upper], params)
    if x.ndim == 0:
        return float(y[0]), bool(upper[0])
    return y.reshape(x.shape), upper.reshape(x.shape)


def map_y_to_x(y, params):
    """Inverse of map_x_to_y; returns (x, upper)."""
    y = _as_array(y)
    ys = np.atleast_1d(y)
    cr = params.critical
    if not cr.admissible and np.any(ys > cr.y_cr):
        raise ChartError("chart is discontinuous at x_cr (Z_cr <= 0); upper values are not all attained")
    upper = ys > cr.y_cr
    x = np.empty_like(ys)
    a, mu = params.alpha, params.mu
    lt_cr = math.log(cr.x_cr)
    if np.any(~upper):
        yl = ys[~upper]
        c0 = params.log_c + a * np.log(yl)

        def F(t):
            e = np.exp(t)
            return e - 0.5 * mu * e ** 3 * (c0 + (1 - a) * t) - yl

        def dF(t):
            e = np.exp(t)
            return e - 0.5 * mu * e ** 3 * (3 * (c0 + (1 - a) * t) + 1 - a)

        # F peaks at x_cr with value y_cr - y; at y = y_cr rounding can push
        # the peak below zero, in which case the root is x_cr itself
        at_cr = F(np.full_like(yl, lt_cr)) <= 0
        xl = np.full_like(yl, cr.x_cr)
        if np.any(~at_cr):
            m = ~at_cr
            c0 = c0[m]
            yl = yl[m]
            lo0 = np.minimum(np.log(yl) - 1.0, lt_cr - 1e-3)
            lo, hi = expand_bracket(F, lo0, np.full_like(yl, lt_cr), decreasing=False)
            xl[m] = np.exp(bisect_vec(F, lo, hi, fprime=dF))
        x[~upper] = xl
    if np.any(upper):
        yu = ys[upper]
        c0 = params.log_c + a * np.log(yu)

        def F(t):
            e = np.exp(t)
            return 2 * cr.y_cr - e + 0.5 * mu * e ** 3 * (c0 + (1 - a) * t) - yu

        def dF(t):
            e = np.exp(t)
            return -e + 0.5 * mu * e ** 3 * (3 * (c0 + (1 - a) * t) + 1 - a)

        lo = np.full_like(yu, lt_cr)
        hi = np.maximum(lo, np.log(yu) / 3.0) + 1.0
        hi = _expand_up(F, hi, 1.0)
        x[upper] = np.exp(bisect_vec(F, lo, hi, fprime=dF))
    if y.ndim == 0:
        return float(x[0]), bool(upper[0])
    return x.reshape(y.shape), upper.reshape(y.shape)


# ---------------------------------------------------------------------------
# local quantities

@dataclass(frozen=True)
class ChartPoint:
    x: np.ndarray
    y: np.ndarray
    upper: np.ndarray
    A: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    Ycap: np.ndarray
    chi: np.ndarray

    @property
    def branch(self):
        return np.where(self.upper, "upper", "lower")

    @property
    def dy_dx(self):
        return np.where(self.upper, -self.Ycap / self.Z, self.Ycap / self.X)


def chart_point(x, params):
    x = np.atleast_1d(_as_array(x))
    y, upper = map_x_to_y(x, params)
    return _chart_from(x, y, upper, params)


def _chart_from(x, y, upper, params):
    mu, a = params.mu, params.alpha
    A = log_A(x, y, params)
    q = a * mu * x ** 3 / (2 * y)
    X = 1.0 + q
    Z = 1.0 - q
    Y = 1.0 - 0.5 * mu * x ** 2 * (3 * A + 1 - a)
    ycr = params.critical.y_cr
    chi = np.where(upper,
                   (-2 * ycr / x + mu * x ** 2 * (A + 0.5)) / Z,
                   -mu * x ** 2 * (A + 0.5) / X)
    return ChartPoint(x, y, upper, A, X, Z, Y, chi)


def chi_at(x, params):
    """chi = dy/dx - y/x in closed form (branch-dependent)."""
    return chart_point(x, params).chi


def chi_combo_from(cp, params):
    mu, a = params.mu, params.alpha
    x, y, A, X, Z, Y = cp.x, cp.y, cp.A, cp.X, cp.Z, cp.Ycap
    ycr = params.critical.y_cr
    low = -(mu * x ** 2 / X) * ((1 - a) / x + a * Y / (y * X)
                                 - a * mu * x ** 2 / (2 * y * X) * (A + 0.5) * (3 - x / y * Y / X))
    up = (6 * ycr / (x ** 2 * Z)
          + mu * x ** 2 / Z * ((1 - a) / x - a / y * Y / Z)
          + a * mu * x / (2 * y * Z ** 2) * (-2 * ycr + mu * x ** 3 * (A + 0.5)) * (3 + x / y * Y / Z))
    return np.where(cp.upper, up, low)


def chi_combo(x, params):
    """d(chi)/dx - 2 chi/x in closed form."""
    return chi_combo_from(chart_point(x, params), params)


def y_second_derivative(cp, params):
    """d^2y/dx^2 = chi_combo + 3 chi/x  (from dy/dx = y/x + chi)."""
    return chi_combo_from(cp, params) + 3 * cp.chi / cp.x


# ---------------------------------------------------------------------------
# alpha = 1 closed forms, with z = y/y_cr and r = x/y_cr

def z0_alpha1(gamma):
    """Root z0 > 2 of (z0 - 2)^2 ln(gamma z0)/ln(gamma) = 1."""
    Lg = math.log(gamma)

    def h(z):
        return (z - 2) ** 2 * math.log(gamma * z) / Lg - 1.0

    hi = 3.0
    while h(hi) < 0:
        hi = 2 * hi
    return brentq(h, 2.0, hi, xtol=1e-15, rtol=1e-15)


def alpha1_closed_form(z, gamma):
    """x/y_cr as a function of z = y/y_cr for alpha = 1, piecewise by cubic root formula."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ChartError("z must be positive")
    Lg = math.log(gamma)
    if Lg <= 0.5:
        raise ChartError("alpha = 1 requires gamma > e^(1/2)")
    zs = np.atleast_1d(z)
    out = np.empty_like(zs)
    lgz = np.log(gamma * zs)
    ell = lgz / Lg
    z0 = z0_alpha1(gamma)
    with np.errstate(invalid="ignore", divide="ignore"):
        # near gamma z = 1 the cubic term vanishes; two terms of the series
        tiny = np.abs(lgz) < 1e-8
        r_series = zs + 4.0 / 27.0 * ell * zs ** 3 + 3 * (4.0 / 27.0 * ell) ** 2 * zs ** 5
        # z < 1, gamma z < 1
        k = -ell
        m1 = (zs < 1) & (k > 0) & ~tiny
        w = zs * np.sqrt(k)
        r1 = 3 / np.sqrt(k) * np.sinh(np.log(w + np.sqrt(1 + w * w)) / 3)
        # z < 1, gamma z > 1
        m2 = (zs < 1) & (ell > 0) & ~tiny
        w = zs * np.sqrt(ell)
        r2 = 3 / np.sqrt(ell) * np.sin(np.arctan(w / np.sqrt(1 - w * w)) / 3)
        # 1 <= z < 2
        m3 = (zs >= 1) & (zs < 2)
        w = (2 - zs) * np.sqrt(ell)
        phi3 = np.pi / 6 + np.arctan(np.sqrt(np.maximum(1 - w * w, 0.0)) / w) / 3
        r3 = 3 / np.sqrt(ell) * np.sin(phi3)
        # 2 <= z < z0
        m4 = (zs >= 2) & (zs < z0)
        w = (zs - 2) * np.sqrt(ell)
        phi4 = np.pi / 3 + np.arctan(w / np.sqrt(np.maximum(1 - w * w, 0.0))) / 3
        r4 = 3 / np.sqrt(ell) * np.sin(phi4)
        # z >= z0
        m5 = zs >= z0
        il = 1.0 / ell
        Q = (zs - 2) * il + np.sqrt(np.maximum(((zs - 2) * il) ** 2 - il ** 3, 0.0))
        r5 = 1.5 * (np.cbrt(Q) + il / np.cbrt(Q))
    out[:] = np.nan
    out[m1] = r1[m1]
    out[m2] = r2[m2]
    out[(zs < 1) & tiny] = r_series[(zs < 1) & tiny]
    out[m3] = r3[m3]
    out[m4] = r4[m4]
    out[m5] = r5[m5]
    if np.any(np.isnan(out)):
        raise ChartError("closed form undefined at some z")
    return out.reshape(z.shape) if z.ndim else float(out[0])


def near_critical_tau(delta, gamma):
    """Leading-order tau = x/y_cr - 3/2 for z = 1 + delta, 0 < delta << 1, alpha = 1."""
    return np.sqrt(1.5 * delta * (1.0 - 1.0 / (2.0 * math.log(gamma))))
