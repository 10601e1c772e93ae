"""Source term psi of the linearized equation in the blowup coordinates.

With v(y, t) = U(y) + w and U = 2 arctan(y), the forcing felt by w at
leading order is

    psi = (x^2/y^2) { 8 chi / (x (1+y^2)^2) + 2 (chi_x - 2 chi/x) / (1+y^2)
                      - 4 y chi^2 / (1+y^2)^2
                      + 4 y (lam y_t)^2 / (1+y^2)^2 - 2 lam^2 y_tt / (1+y^2) }.

The time derivatives are taken along x = rho/lambda at frozen mu (slow
modulation), which gives

    lam y_t     = -lam_dot x y'
    lam^2 y_tt  = (2 lam_dot^2 - mu) x y' + lam_dot^2 x^2 y''

so psi is exactly affine in lam_dot^2 at fixed chart parameters.
"""
from dataclasses import dataclass
import math

import numpy as np

from .coords import CoordParams, chart_point, chi_combo_from, map_y_to_x, _chart_from


@dataclass(frozen=True)
class ModulationState:
    lam: float
    lam_dot: float
    mu: float

    @property
    def lam_dot_sq(self):
        return self.lam_dot ** 2

    def chart(self, alpha, beta):
        return CoordParams(self.mu, alpha, beta)

    def is_adiabatic(self, factor=10.0):
        return 0 < factor * self.mu < self.lam_dot_sq < 1.0 / factor


def _check(state, params):
    if abs(state.mu - params.mu) > 1e-12 * params.mu:
        raise ValueError("state.mu and params.mu disagree")


def _bracket_lower(cp, params):
    # the braces multiplying lam_dot^2 mu x^3/2 below x_cr
    a = params.alpha
    x, y, A, X, Z, Y = cp.x, cp.y, cp.A, cp.X, cp.Z, cp.Ycap
    return (a * x ** 2 / y ** 2 * Y ** 2 / X ** 3 - 6 * a * x / (y * X ** 2)
            - 3 * (1 - a) / X - 2 * (2 * Z - 1) * (3 * A + 1 - a) / X ** 2)


def _bracket_upper(cp, params):
    a = params.alpha
    x, y, A, X, Z, Y = cp.x, cp.y, cp.A, cp.X, cp.Z, cp.Ycap
    return (a * x ** 2 / y ** 2 * Y ** 2 / Z ** 3 + 6 * a * x / (y * Z ** 2)
            - 3 * (1 - a) / Z - 2 * (2 * X - 1) * (3 * A + 1 - a) / Z ** 2)


def time_derivatives_from(cp, lam_dot, params):
    """(lam y_t, lam^2 y_tt) from the closed forms, dropping d(mu)/dt terms."""
    mu = params.mu
    ld2 = lam_dot ** 2
    x, X, Z, Y = cp.x, cp.X, cp.Z, cp.Ycap
    yt = np.where(cp.upper, lam_dot * x * Y / Z, -lam_dot * x * Y / X)
    ytt_low = (2 * ld2 - mu) * x * Y / X + 0.5 * ld2 * mu * x ** 3 * _bracket_lower(cp, params)
    ytt_up = -(2 * ld2 - mu) * x * Y / Z - 0.5 * ld2 * mu * x ** 3 * _bracket_upper(cp, params)
    return yt, np.where(cp.upper, ytt_up, ytt_low)


def y_time_derivatives(x, state, params):
    _check(state, params)
    return time_derivatives_from(chart_point(x, params), state.lam_dot, params)


def psi_composed_from(cp, lam_dot, params):
    """psi assembled from chi, chi_x - 2chi/x and the time derivatives."""
    x, y, chi = cp.x, cp.y, cp.chi
    cc = chi_combo_from(cp, params)
    yt, ytt = time_derivatives_from(cp, lam_dot, params)
    q = 1.0 + y * y
    return (x * x / (y * y)) * (8 * chi / (x * q * q) + 2 * cc / q - 4 * y * chi ** 2 / (q * q)
                                + 4 * y * yt ** 2 / (q * q) - 2 * ytt / q)


def psi_lower_explicit(cp, lam_dot, params):
    """Term-by-term explicit form of psi valid below x_cr."""
    mu, a = params.mu, params.alpha
    ld2 = lam_dot ** 2
    x, y, A, X, Z, Y = cp.x, cp.y, cp.A, cp.X, cp.Z, cp.Ycap
    q = 1.0 + y * y
    t1 = -8 * mu * x / q ** 2 * (A + 0.5) / X
    t2 = -4 * ld2 * x / (q ** 2 * X)
    t3 = 2 * ld2 * mu * x ** 4 * y * (A - a) / (q ** 2 * X ** 2)
    t4 = 2 * a * mu * x ** 2 / (y * X * q) * (y / x - Y / X
                                              + 0.5 * mu * x ** 2 * (A + 0.5) / X * (3 - x / y * Y / X))
    t5 = -4 * mu ** 2 * x ** 4 * y / q ** 2 * (A + 0.5) ** 2 / X ** 2
    t6 = -4 * ld2 * y * x ** 2 * (1 - Y ** 2) / (q ** 2 * X ** 2)
    t7 = -(2 * x / q) * (-(2 * ld2 - mu) * (1 - Y) / X
                         + 0.5 * ld2 * mu * x ** 2 * _bracket_lower(cp, params))
    return (x * x / (y * y)) * (t1 + t2 + t3 + t4 + t5 + t6 + t7)


def psi_upper_ldsq_part(cp, lam_dot, params):
    """lam_dot^2-proportional part of psi above x_cr, with 1 + y^2 -> y^2."""
    mu = params.mu
    x, y, Z, Y = cp.x, cp.y, cp.Z, cp.Ycap
    return 2 * lam_dot ** 2 * x ** 3 / y ** 4 * (2 * x / y * Y ** 2 / Z ** 2 + 2 * Y / Z
                                                   + 0.5 * mu * x ** 2 * _bracket_upper(cp, params))


def psi_full_from(cp, lam_dot, params):
    low = psi_lower_explicit(cp, lam_dot, params)
    up = psi_upper_ldsq_part(cp, lam_dot, params) + psi_composed_from(cp, 0.0, params)
    return np.where(cp.upper, up, low)


def psi_full(x, state, params):
    """psi: explicit form below x_cr; above x_cr the lam_dot^2 part in the
    large-y form plus the mu part composed from chi and the time derivatives."""
    _check(state, params)
    return psi_full_from(chart_point(x, params), state.lam_dot, params)


def psi_composed(x, state, params):
    _check(state, params)
    return psi_composed_from(chart_point(x, params), state.lam_dot, params)


def psi_leading_from(cp, lam_dot, params):
    mu = params.mu
    x, y, A, X = cp.x, cp.y, cp.A, cp.X
    return -(x ** 3 / y ** 2) * (8 * mu * (A + 0.5) + 4 * lam_dot ** 2) / ((1 + y * y) ** 2 * X)


def psi_leading(x, state, params):
    """psi_1: the first two terms of the explicit lower-branch form."""
    _check(state, params)
    return psi_leading_from(chart_point(x, params), state.lam_dot, params)


def psi_remainder(x, state, params):
    _check(state, params)
    cp = chart_point(x, params)
    return psi_full_from(cp, state.lam_dot, params) - psi_leading_from(cp, state.lam_dot, params)


@dataclass(frozen=True)
class PsiTable:
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray


def psi_on_y_grid(y, state, params):
    """psi, psi_1, psi_2 sampled at given y (inverting the chart)."""
    _check(state, params)
    y = np.asarray(y, dtype=float)
    x, upper = map_y_to_x(y, params)
    cp = _chart_from(x, y, upper, params)
    p = psi_full_from(cp, state.lam_dot, params)
    p1 = psi_leading_from(cp, state.lam_dot, params)
    return PsiTable(x, y, p, p1, p - p1)


def critical_drift_rate(lam_dot, mu, a):
    """(1/x_cr) lam dx_cr/dt on shell at fixed (alpha, beta).

    x_cr scales as mu^{-1/2} and on shell lam d(ln mu)/dt = 2 lam_dot / (ln(a/mu) - 1).
    """
    return -lam_dot / (math.log(a / mu) - 1.0)
