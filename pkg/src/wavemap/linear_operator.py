"""Linearization around the kink and the solvability machinery.

    L w = -(1/y)(y w')' + f'(U) w / y^2

On a log grid y = e^s this is  L w = (-w_ss + f'(U) w) / y^2, which is what
we discretize.  For the sine model (k = 1) the two homogeneous solutions are

    w1 = y/(1+y^2)                      (the scaling zero mode zeta)
    w2 = y/2 - 1/(2y) + 2 y ln y/(1+y^2)

with Wronskian w1 w2' - w2 w1' = 1/y.  Variation of constants gives the
Green's-function solution used by green_solve.
"""
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.integrate import quad

from .blowup_law import law_residual


class GridWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# profiles

@dataclass(frozen=True)
class RadialProfile:
    """Values on a log-spaced grid with weights for int (.) y dy."""
    grid: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for a in (self.grid, self.values, self.weights):
            a.setflags(write=False)

    @property
    def s(self):
        return np.log(self.grid)

    @property
    def ds(self):
        return float(np.log(self.grid[1] / self.grid[0]))

    def with_values(self, values):
        return RadialProfile(self.grid, np.asarray(values, dtype=float), self.weights)

    def integrate(self, values=None):
        v = self.values if values is None else values
        return float(np.dot(self.weights, v))

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.grid, self.values]), delimiter=",",
                   header="y,value", comments="", fmt="%.17g")


def log_grid(y_min=1e-4, y_max=1e6, n=8192):
    """Uniform grid in s = ln y with trapezoid weights for int (.) y dy = int (.) y^2 ds."""
    s = np.linspace(math.log(y_min), math.log(y_max), n)
    y = np.exp(s)
    ds = s[1] - s[0]
    w = y * y * ds
    w[0] *= 0.5
    w[-1] *= 0.5
    return y, w


def profile(fn, y_min=1e-4, y_max=1e6, n=8192):
    y, w = log_grid(y_min, y_max, n)
    return RadialProfile(y, np.asarray(fn(y), dtype=float), w)


# ---------------------------------------------------------------------------
# kink models

@dataclass(frozen=True)
class KinkModel:
    name: str                  # "sine" or "polynomial"
    k: int = 1

    def U(self, y):
        y = np.asarray(y, dtype=float)
        if self.name == "sine":
            return 2 * np.arctan(y ** self.k)
        return (1 - y * y) / (1 + y * y)

    def zeta(self, y):
        y = np.asarray(y, dtype=float)
        if self.name == "sine":
            yk = y ** self.k
            return self.k * yk / (1 + yk * yk)
        return 4 * y * y / (1 + y * y) ** 2

    def zeta_prime(self, y):
        y = np.asarray(y, dtype=float)
        if self.name == "sine":
            yk = y ** self.k
            return self.k * self.k * yk / y * (1 - yk * yk) / (1 + yk * yk) ** 2
        return 8 * y * (1 - y * y) / (1 + y * y) ** 3

    def f(self, u):
        if self.name == "sine":
            return 0.5 * self.k ** 2 * np.sin(2 * u)
        return 2 * u * (u * u - 1)

    def fprime(self, u):
        if self.name == "sine":
            return self.k ** 2 * np.cos(2 * u)
        return 6 * u * u - 2

    def potential(self, u):
        """F with F' = f, F(vacuum) = 0."""
        if self.name == "sine":
            return 0.5 * self.k ** 2 * np.sin(u) ** 2
        return 0.5 * (u * u - 1) ** 2

    @property
    def charge_span(self):
        return math.pi if self.name == "sine" else 2.0


SINE = KinkModel("sine", 1)
POLYNOMIAL = KinkModel("polynomial")


def fprime_cos2U(y):
    """cos(2U) for U = 2 arctan y, written without trigonometry."""
    y2 = y * y
    return 1 - 8 * y2 / (1 + y2) ** 2


def _potential_coefficient(y, model):
    if model.name == "sine" and model.k == 1:
        return fprime_cos2U(y)
    return model.fprime(model.U(y))


# ---------------------------------------------------------------------------
# the operator

_C4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_B0 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
_B1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0


def second_derivative_s(w, ds):
    """Fourth-order d^2w/ds^2 on a uniform grid, one-sided at both ends."""
    w = np.asarray(w, dtype=float)
    n = w.size
    if n < 6:
        raise ValueError("need at least 6 points")
    d = np.empty_like(w)
    d[2:-2] = (_C4[0] * w[:-4] + _C4[1] * w[1:-3] + _C4[2] * w[2:-2]
               + _C4[3] * w[3:-1] + _C4[4] * w[4:])
    d[0] = _B0 @ w[:6]
    d[1] = _B1 @ w[:6]
    d[-1] = _B0 @ w[-6:][::-1]
    d[-2] = _B1 @ w[-6:][::-1]
    return d / (ds * ds)


def apply_L(w, model=SINE, tol=5e-3):
    """L w on the profile grid.

    Emits a GridWarning when the step in s is so coarse that the fourth-order
    truncation estimate h^4/90 exceeds `tol`.
    """
    y = w.grid
    ds = w.ds
    if ds ** 4 / 90.0 > tol:
        warnings.warn(f"log-grid step {ds:.3g} too coarse for tolerance {tol}", GridWarning)
    wss = second_derivative_s(w.values, ds)
    out = (-wss + _potential_coefficient(y, model) * w.values) / (y * y)
    return w.with_values(out)


# ---------------------------------------------------------------------------
# zero modes

def w1(y):
    y = np.asarray(y, dtype=float)
    return y / (1 + y * y)


def w2(y):
    y = np.asarray(y, dtype=float)
    return 0.5 * y - 0.5 / y + 2 * y * np.log(y) / (1 + y * y)


def w1_prime(y):
    y = np.asarray(y, dtype=float)
    return (1 - y * y) / (1 + y * y) ** 2


def w2_prime(y):
    y = np.asarray(y, dtype=float)
    q = 1 + y * y
    return 0.5 + 0.5 / (y * y) + 2 * ((1 - y * y) * np.log(y) + q) / (q * q)


def wronskian(y):
    return w1(y) * w2_prime(y) - w2(y) * w1_prime(y)


def zero_modes(model=SINE):
    if not (model.name == "sine" and model.k == 1):
        raise ValueError("explicit zero modes are provided for the sine model with k = 1")
    return w1, w2


# ---------------------------------------------------------------------------
# Green's function

@dataclass(frozen=True)
class GreenSolution:
    W: RadialProfile
    deficit: float            # int_0^inf w1 psi s ds; the coefficient of w2 near the origin
    bounded: bool
    c1: float


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1B0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D1B1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def first_derivative_s(w, ds):
    w = np.asarray(w, dtype=float)
    d = np.empty_like(w)
    d[2:-2] = _D1[0] * w[:-4] + _D1[1] * w[1:-3] + _D1[3] * w[3:-1] + _D1[4] * w[4:]
    d[0] = _D1B0 @ w[:5]
    d[1] = _D1B1 @ w[:5]
    d[-1] = -(_D1B0 @ w[-5:][::-1])
    d[-2] = -(_D1B1 @ w[-5:][::-1])
    return d / ds


def _cumulative(f, ds):
    # Cumulative trapezoid with the first Euler-Maclaurin correction.  Its
    # error is a smooth function of s, so applying the second-difference
    # operator to the result keeps fourth order (Simpson's alternating
    # error would be amplified by 1/h^2).
    out = np.empty_like(f)
    out[0] = 0.0
    out[1:] = np.cumsum(0.5 * ds * (f[1:] + f[:-1]))
    fp = first_derivative_s(f, ds)
    return out - ds * ds / 12.0 * (fp - fp[0])


def green_solve(psi, model=SINE, c1=0.0, rtol=1e-6):
    """Variation-of-constants solution of L W = psi.

        W = c1 w1 + w1 int_0^y w2 psi s ds + w2 int_y^inf w1 psi s ds

    The second integral is formed as (total - prefix).  When the deficit
    int_0^inf w1 psi s ds is not negligible against int |w1 psi| s ds the
    solution is flagged unbounded: near the origin it behaves like
    deficit * w2 ~ -deficit/(2y).
    """
    zero_modes(model)
    y = psi.grid
    a = w1(y)
    b = w2(y)
    f1 = a * psi.values * y * y      # w1 psi s ds -> integrand in ds
    f2 = b * psi.values * y * y
    I1 = _cumulative(f1, psi.ds)
    I2 = _cumulative(f2, psi.ds)
    total1 = I1[-1]
    W = c1 * a + a * I2 + b * (total1 - I1)
    scale = psi.integrate(np.abs(a * psi.values))
    bounded = abs(total1) <= rtol * scale if scale > 0 else True
    return GreenSolution(psi.with_values(W), float(total1), bool(bounded), c1)


def solvability_integral(psi, model=SINE, tail_power=None, warn_ratio=1e-3):
    """int_0^inf y zeta psi dy on the profile grid plus a power-law tail estimate.

    The tail beyond the last grid point is extrapolated from the local
    log-log slope of the integrand; a ConvergenceWarning is issued if that
    estimate is larger than warn_ratio times the bulk.
    """
    y = psi.grid
    g = model.zeta(y) * psi.values * y * y      # integrand in ds
    head = psi.integrate(model.zeta(y) * psi.values)
    tail = 0.0
    if g[-1] != 0 and g[-2] != 0 and np.sign(g[-1]) == np.sign(g[-2]):
        p = np.log(abs(g[-1] / g[-2])) / (np.log(y[-1] / y[-2])) if tail_power is None else tail_power
        if p < 0:
            tail = -g[-1] / p          # int_{s_N}^inf g_N e^{p (s - s_N)} ds
        else:
            tail = math.inf * np.sign(g[-1])
    if abs(tail) > warn_ratio * max(abs(head), 1e-300):
        warnings.warn(f"tail estimate {tail:.3g} vs bulk {head:.3g}", ConvergenceWarning)
    return head + (tail if np.isfinite(tail) else 0.0)


# ---------------------------------------------------------------------------
# closed-form pieces

def appendix2_integrals():
    """int_0^inf y^3/(1+y^2)^3 dy and int_0^inf y^3 ln(y)/(1+y^2)^3 dy (1/4 and 1/8)."""
    f1 = lambda y: y ** 3 / (1 + y * y) ** 3
    f2 = lambda y: y ** 3 * math.log(y) / (1 + y * y) ** 3 if y > 0 else 0.0
    i1 = quad(f1, 0, 1, epsabs=1e-15, epsrel=1e-13)[0] + quad(f1, 1, np.inf, epsabs=1e-15, epsrel=1e-13)[0]
    i2 = quad(f2, 0, 1, epsabs=1e-15, epsrel=1e-13)[0] + quad(f2, 1, np.inf, epsabs=1e-15, epsrel=1e-13)[0]
    return i1, i2


def appendix2_first_substituted():
    """(1/2) int_0^inf x/(1+x)^3 dx, the first integral after x = y^2."""
    f = lambda x: x / (1 + x) ** 3
    return 0.5 * (quad(f, 0, 1, epsabs=1e-15, epsrel=1e-13)[0] + quad(f, 1, np.inf, epsabs=1e-15, epsrel=1e-13)[0])


def reduced_solvability(mu, lambda_dot_sq, beta):
    """(numeric, closed) for the zero-mode projection of psi_1 with y -> x.

    numeric: int_0^inf x^3/(1+x^2)^3 { 8 mu (ln(sqrt(mu) x / beta) + 1/2) + 4 lam_dot^2 } dx
    closed:  lam_dot^2 + 2 mu (ln(sqrt(mu)/beta) + 1)
    """
    c = 0.5 * math.log(mu) - math.log(beta)

    def f(x):
        return x ** 3 / (1 + x * x) ** 3 * (8 * mu * (c + math.log(x) + 0.5) + 4 * lambda_dot_sq)

    scale = 8 * mu * (abs(c) + 1) + 4 * lambda_dot_sq
    num = (quad(f, 0, 1, epsabs=1e-16 * scale, epsrel=1e-13, limit=200)[0]
           + quad(f, 1, np.inf, epsabs=1e-16 * scale, epsrel=1e-13, limit=200)[0])
    return num, float(law_residual(lambda_dot_sq, mu, beta))


def scaling_pairing(R, model=SINE):
    """int_0^R zeta (zeta + x zeta') x dx."""
    f = lambda x: model.zeta(x) * (model.zeta(x) + x * model.zeta_prime(x)) * x
    pts = [p for p in (1.0, 10.0, 100.0) if p < R]
    edges = [0.0] + pts + [R]
    return sum(quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))


def zeta_norm_partial(R, model=SINE):
    """int_0^R zeta^2 y dy."""
    f = lambda x: model.zeta(x) ** 2 * x
    pts = [p for p in (1.0, 10.0, 100.0, 1000.0) if p < R]
    edges = [0.0] + pts + [R]
    return sum(quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))
