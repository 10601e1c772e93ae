"""Scaling law for the collapsing kink.

The modulation parameter obeys

    lambda * lambda_ddot = a * f^{-1}(lambda_dot^2 / a),    f(x) = x ln(1/x),

which is the same statement as  lambda_dot^2 + 2 mu (ln(sqrt(mu)/beta) + 1) = 0
with mu = lambda * lambda_ddot and a = beta^2 e^{-2}.

This module holds the special functions (f, its lower-branch inverse, g and
g^{-1}), the ODE integrator, the exact quadrature for the remaining time
sqrt(a)(t* - t), two asymptotic forms of it, and the conserved energy of the
ODE.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.special import erfc, lambertw

from ._roots import bisect_newton

E_INV = math.exp(-1.0)
A_DEFAULT = 0.146


class DomainError(ValueError):
    pass


class AsymptoticWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# special functions

def f_log(x):
    """f(x) = x ln(1/x) on (0, 1]."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x > 1)):
        raise DomainError("f_log needs 0 < x <= 1")
    out = -x * np.log(x)
    return out if out.ndim else float(out)


def _check_z(z, name):
    z = np.asarray(z, dtype=float)
    if np.any((z <= 0) | (z > E_INV * (1.0 + 1e-15))):
        raise DomainError(f"{name} needs 0 < z <= 1/e")
    return np.minimum(z, E_INV)


def _g_core(z):
    """g(z) - 1, from  u - log1p(u) = -ln(e z).

    The left side is convex and increasing in u >= 0, so Newton started
    above the root converges monotonically.  The start is -W_{-1}(-z) - 1
    away from the branch point and the branch-point series near it.
    """
    with np.errstate(divide="ignore"):
        k = np.where(z < 0.25, -1.0 - np.log(z), -np.log1p(math.e * z - 1.0))
    k = np.maximum(k, 0.0)
    p = np.sqrt(2.0 * k)
    series = p + p * p / 3.0 + 11.0 * p ** 3 / 72.0
    with np.errstate(invalid="ignore"):
        w = -np.real(lambertw(-z, -1)) - 1.0
    u = np.where(k < 1e-3, series, w)
    u = np.maximum(u, p) * (1.0 + 1e-8) + 1e-300
    for _ in range(6):
        r = u - np.log1p(u) - k
        un = u - r * (1.0 + u) / u
        u = np.where(u > 0, np.maximum(un, 0.0), u)
    return u


def f_inverse(z):
    """Lower-branch inverse of f: the root of x ln(1/x) = z in (0, 1/e].

    Computed as z / g(z), with g from a Newton iteration seeded by the
    W_{-1} branch of Lambert W.
    """
    z = _check_z(z, "f_inverse")
    out = z / (1.0 + _g_core(z))
    return out if out.ndim else float(out)


def g_of(z):
    """g(z) = z / f^{-1}(z) = -W_{-1}(-z); solves g = ln(g/z), g >= 1."""
    z = _check_z(z, "g_of")
    g = 1.0 + _g_core(z)
    return g if g.ndim else float(g)


def g_inverse(x):
    """g^{-1}(x) = x e^{-x} on x >= 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1):
        raise DomainError("g_inverse needs x >= 1")
    with np.errstate(under="ignore"):
        out = x * np.exp(-x)
    return out if out.ndim else float(out)


def a_from_beta(beta):
    return beta * beta * math.exp(-2.0)


def law_residual(lambda_dot_sq, mu, beta):
    """lambda_dot^2 + 2 mu (ln(sqrt(mu)/beta) + 1)."""
    return lambda_dot_sq + 2.0 * mu * (0.5 * np.log(mu) - np.log(beta) + 1.0)


def mu_from_law(lambda_dot_sq, beta):
    """Positive root mu of the law for given lambda_dot^2 and beta.

    The root on (0, a) with a = beta^2/e^2 is a * f^{-1}(lambda_dot^2/a); a
    short bisection/Newton refinement on the law residual in ln(mu) follows.
    """
    a = a_from_beta(beta)
    z = lambda_dot_sq / a
    if lambda_dot_sq <= 0:
        raise DomainError("lambda_dot_sq must be positive")
    if z >= E_INV:
        raise DomainError(f"no root: lambda_dot^2/a = {z:.6g} >= 1/e")
    mu0 = a * f_inverse(z)
    # the residual is decreasing in mu on (0, a e^{-1}); refine in s = ln mu
    lb = math.log(beta)

    def r(s):
        return lambda_dot_sq + 2.0 * math.exp(s) * (0.5 * s - lb + 1.0)

    def dr(s):
        return 2.0 * math.exp(s) * (0.5 * s - lb + 1.5)

    s0 = math.log(mu0)
    s_top = math.log(a) - 1.0
    lo, hi = s0 - 1e-6, min(s0 + 1e-6, s_top)
    if r(lo) * r(hi) > 0:
        lo, hi = s0 - 50.0, s_top
    return math.exp(bisect_newton(r, lo, hi, fprime=dr, xtol=1e-15))


# ---------------------------------------------------------------------------
# states and trajectories

@dataclass(frozen=True)
class ScalingState:
    lam: float
    lam_dot: float
    mu: float

    def law_residual(self, beta):
        return law_residual(self.lam_dot ** 2, self.mu, beta)

    @classmethod
    def on_shell(cls, lam, lam_dot, a):
        return cls(lam, lam_dot, a * f_inverse(lam_dot ** 2 / a))


@dataclass(frozen=True)
class LawConstants:
    a: float
    c: float
    t_star: float
    b: float = float("nan")


def first_integral_c(lam, lam_dot, a):
    """Integration constant c with g(lambda_dot^2/a) - 1 = 2 sqrt(ln(c/lambda))."""
    g = g_of(np.asarray(lam_dot, dtype=float) ** 2 / a)
    return lam * np.exp(((g - 1.0) / 2.0) ** 2)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    lam: np.ndarray
    lam_dot: np.ndarray
    a: float
    lam_stop: float
    mu: np.ndarray = field(repr=False)
    c: float = float("nan")
    t_star: float = float("nan")

    def __post_init__(self):
        for name in ("t", "lam", "lam_dot", "mu"):
            getattr(self, name).setflags(write=False)

    def first_integral(self):
        """g(lambda_dot^2/a) - 1 - 2 sqrt(ln(c/lambda)) along the trajectory."""
        g = g_of(self.lam_dot ** 2 / self.a)
        return g - 1.0 - 2.0 * np.sqrt(np.log(self.c / self.lam))

    def constants(self, b=float("nan")):
        return LawConstants(self.a, float(self.c), float(self.t_star), b)


def scaling_rhs(a):
    def rhs(t, y):
        lam, ld = y
        z = ld * ld / a
        if not (0.0 < z < E_INV):
            if z == 0.0:
                return [ld, 0.0]
            # NaN forces the adaptive stepper to reject and shrink the step
            return [np.nan, np.nan]
        return [ld, a * f_inverse(z) / lam]
    return rhs


def integrate_scaling_ode(lam0, lam_dot0, a=A_DEFAULT, rtol=1e-12, atol=1e-14,
                          stop_ratio=1e-6, max_step=np.inf):
    """Integrate lambda*lambda_ddot = a f^{-1}(lambda_dot^2/a) until lambda = stop_ratio*lambda0.

    Uses the Dormand-Prince 5(4) pair.  The returned t_star adds the
    linear extrapolation lambda/|lambda_dot| from the last point.
    """
    if lam0 <= 0 or lam_dot0 > 0:
        raise DomainError("need lambda0 > 0 and lambda_dot0 <= 0")
    if lam_dot0 ** 2 / a >= E_INV:
        raise DomainError("initial lambda_dot^2/a outside the f^{-1} domain")
    lam_stop = stop_ratio * lam0

    def hit(t, y):
        return y[0] - lam_stop
    hit.terminal = True
    hit.direction = -1

    if lam_dot0 == 0.0:
        t = np.array([0.0])
        return Trajectory(t, np.array([lam0]), np.array([0.0]), a, lam_stop,
                          mu=np.array([0.0]), c=np.inf, t_star=np.inf)

    # the natural time scale is lambda0/|lambda_dot0|; never run past a
    # generous multiple of it
    t_max = 1e3 * lam0 / abs(lam_dot0)
    sol = solve_ivp(scaling_rhs(a), (0.0, t_max), [lam0, lam_dot0], method="RK45",
                    rtol=rtol, atol=atol, events=hit, max_step=max_step)
    if sol.status < 0:
        raise RuntimeError(sol.message)
    t, lam, ld = sol.t, sol.y[0], sol.y[1]
    if sol.t_events[0].size:
        te = sol.t_events[0][0]
        ye = sol.y_events[0][0]
        if te > t[-1]:
            t = np.append(t, te)
            lam = np.append(lam, ye[0])
            ld = np.append(ld, ye[1])
    mu = a * f_inverse(ld ** 2 / a)
    c = float(first_integral_c(lam0, lam_dot0, a))
    t_star = t[-1] + lam[-1] / abs(ld[-1])
    return Trajectory(t, lam, ld, a, lam_stop, mu=mu, c=c, t_star=t_star)


# ---------------------------------------------------------------------------
# exact quadrature for the remaining time

def blowup_time_quadrature(lam, c, a=A_DEFAULT, epsrel=1e-12):
    """sqrt(a)(t* - t) at scale lambda, via the z = sqrt(ln(c/x)) integral.

        sqrt(a)(t* - t) = sqrt(2) c e^{1/2} int_{Z}^{inf} z e^{z - z^2} / sqrt(z + 1/2) dz,
        Z = sqrt(ln(c/lambda)).
    """
    if lam >= c:
        raise DomainError("need lambda < c")
    if lam <= 0:
        return 0.0
    Z = math.sqrt(math.log(c / lam))
    zpk = max(Z, 0.5)

    def h(z):
        return z * math.exp(z - z * z) / math.sqrt(z + 0.5)

    # split at the peak of the integrand so quad sees the bulk
    v1 = quad(h, Z, zpk + 1.0, epsrel=epsrel, epsabs=0.0, limit=200)[0] if zpk + 1.0 > Z else 0.0
    v2 = quad(h, max(Z, zpk + 1.0), np.inf, epsrel=epsrel, epsabs=0.0, limit=200)[0]
    return math.sqrt(2.0) * c * math.exp(0.5) * (v1 + v2)


def blowup_time_direct(lam, c, a=A_DEFAULT, epsrel=1e-12):
    """Same quantity from the integral over x in (0, lambda) of
    e^{1/2 + sqrt(L)} / sqrt(1 + 2 sqrt(L)),  L = ln(c/x).

    Evaluated with x = lambda e^{-s}, s in (0, inf).
    """
    if lam >= c:
        raise DomainError("need lambda < c")
    L0 = math.log(c / lam)

    def h(s):
        q = math.sqrt(L0 + s)
        return math.exp(-s + 0.5 + q) / math.sqrt(1.0 + 2.0 * q)

    v = quad(h, 0.0, 40.0, epsrel=epsrel, epsabs=0.0, limit=400)[0]
    v += quad(h, 40.0, np.inf, epsrel=epsrel, epsabs=0.0, limit=200)[0]
    return lam * v


def remaining_time(lam, c, a=A_DEFAULT):
    return blowup_time_quadrature(lam, c, a) / math.sqrt(a)


@dataclass(frozen=True)
class AsymptoticTimes:
    three_term: float   # large-log expansion with the 1/(4s) - 1/(32 s^2) bracket
    leading: float      # erf form from the leading-order law
    log_ratio: float    # ln(c/lambda)
    reliable: bool


def asymptotic_profile(lam, c, a=A_DEFAULT):
    """Two approximate forms of sqrt(a)(t* - t).

    three_term:  lambda e^{1/2+s} / (sqrt(2) sqrt(s)) * (1 + 1/(4s) - 1/(32 s^2)),  s = sqrt(ln(c/lambda))
    leading:     lambda e^{s} + c (sqrt(pi)/2) e^{1/4} erfc(s - 1/2)

    The second is the exact primitive of the leading-order law
    lambda*lambda_ddot = lambda_dot^2 / ln(a/lambda_dot^2).
    """
    L = math.log(c / lam)
    if L <= 0:
        raise DomainError("need lambda < c")
    s = math.sqrt(L)
    reliable = L >= 4.0
    if not reliable:
        warnings.warn(f"ln(c/lambda) = {L:.3g} < 4: expansion unreliable", AsymptoticWarning)
    three = lam * math.exp(0.5 + s) / (math.sqrt(2.0) * math.sqrt(s)) * (1.0 + 1.0 / (4.0 * s) - 1.0 / (32.0 * L))
    lead = lam * math.exp(s) + c * math.sqrt(math.pi) / 2.0 * math.exp(0.25) * erfc(s - 0.5)
    return AsymptoticTimes(three, lead, L, reliable)


def leading_order_quadrature(lam, c, epsrel=1e-12):
    """int_0^lambda e^{sqrt(ln(c/x))} dx by direct quadrature (x = lambda e^{-s})."""
    L0 = math.log(c / lam)

    def h(s):
        return math.exp(-s + math.sqrt(L0 + s))

    v = quad(h, 0.0, 40.0, epsrel=epsrel, epsabs=0.0, limit=400)[0]
    v += quad(h, 40.0, np.inf, epsrel=epsrel, epsabs=0.0, limit=200)[0]
    return lam * v


# ---------------------------------------------------------------------------
# conserved energy of the scaling ODE

def _inv_finv(s, a):
    z = s * s / a
    return 1.0 / f_inverse(z)


def h_prime(x, a, x_ref, scale=None):
    """h'(x) with h'' = -1/(scale * f^{-1}(x^2/a)), h'(x_ref) = 0.  scale defaults to a."""
    k = a if scale is None else scale
    v = quad(lambda s: _inv_finv(s, a), x_ref, x, epsrel=1e-13, epsabs=0.0, limit=200)[0]
    return -v / k


def h_value(x, a, x_ref, scale=None):
    """h(x) with h(x_ref) = h'(x_ref) = 0."""
    k = a if scale is None else scale
    v = quad(lambda s: (x - s) * _inv_finv(s, a), x_ref, x, epsrel=1e-13, epsabs=0.0, limit=200)[0]
    return -v / k


def hamiltonian_energy(lam, lam_dot, a, x_ref, scale=None):
    """E = -lambda_dot h'(lambda_dot) + h(lambda_dot) - ln(lambda).

    With h'' = -1/(a f^{-1}(x^2/a)) this is conserved by the scaling ODE;
    `scale` lets callers try another normalization of h''.
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    for x in (lam_dot, x_ref):
        if x * x / a >= E_INV or x == 0.0:
            raise DomainError("lambda_dot^2/a outside the f^{-1} domain")
    return -lam_dot * h_prime(lam_dot, a, x_ref, scale) + h_value(lam_dot, a, x_ref, scale) - math.log(lam)


def energy_along(traj, x_ref=None, every=1, scale=None):
    x_ref = traj.lam_dot[0] if x_ref is None else x_ref
    idx = np.arange(0, traj.t.size, every)
    E = np.array([hamiltonian_energy(traj.lam[i], traj.lam_dot[i], traj.a, x_ref, scale) for i in idx])
    return idx, E


# ---------------------------------------------------------------------------
# the curve compared against simulations

def fig1_analytic(x, a=A_DEFAULT, b=0.0):
    """y = ln(a)/2 - sqrt(x + b)."""
    x = np.asarray(x, dtype=float)
    if np.any(x + b <= 0):
        raise DomainError("need x + b > 0")
    out = 0.5 * math.log(a) - np.sqrt(x + b)
    return out if out.ndim else float(out)


def fig1_coordinates(t, lam, t_star):
    """(x, y) = (-ln(t* - t), ln(lambda/(t* - t)))."""
    dt = t_star - np.asarray(t, dtype=float)
    return -np.log(dt), np.log(np.asarray(lam) / dt)
