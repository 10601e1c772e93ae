"""The (alpha, beta) selection problem: I(alpha, beta), the energy of the
deformed kink, its gradients, and the search for the fold of I = 0.

All integrals are written in z = x/x_cr and split at z = 1.  The default
route uses fixed Gauss-Legendre panels, geometric in z, evaluated in one
vectorized call to the chart; `compute_I_quad` is an adaptive scipy.quad
route kept as an independent check.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os
import warnings

import numpy as np
from scipy.integrate import quad

from .blowup_law import mu_from_law
from .coords import ChartError, CoordParams, chart_point, map_y_to_x, _chart_from
from .source_term import ModulationState


class FoldNotFound(RuntimeError):
    """No fold of I = 0 was found; `diagnostics` holds what the scan saw."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class QuadratureWarning(UserWarning):
    pass


MU_EVAL = 1e-8
LAM_DOT_SQ_E = 1e-3


# ---------------------------------------------------------------------------
# panels

_GL_N = 24
_GL_T, _GL_W = np.polynomial.legendre.leggauss(_GL_N)


def _panel_nodes(edges):
    """Gauss-Legendre nodes and weights on consecutive intervals."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * _GL_T
    weights = half * _GL_W
    return nodes.ravel(), weights.ravel()


def _lower_edges(z_min=1e-9, per_decade=3):
    n = int(round(-math.log10(z_min) * per_decade))
    e = np.logspace(math.log10(z_min), 0.0, n + 1)
    # refine toward z = 1 where the lower integrands change fastest
    fine = 1.0 - np.logspace(-6, math.log10(0.5), 25)[::-1]
    return np.unique(np.concatenate([[0.0], e[e < 0.5], fine, [1.0]]))


def _upper_edges(z_max=1e4, per_decade=6):
    fine = 1.0 + np.logspace(-6, 0, 25)
    e = np.logspace(math.log10(2.0), math.log10(z_max), int(per_decade * math.log10(z_max / 2)) + 1)
    return np.unique(np.concatenate([[1.0], fine, e]))


def _tail(values, nodes, total):
    """Power-law estimate of int_{z_last}^inf given the last two panel nodes."""
    v1, v2 = values[-2], values[-1]
    z1, z2 = nodes[-2], nodes[-1]
    if v2 == 0.0:
        return 0.0
    if v1 == 0.0 or np.sign(v1) != np.sign(v2):
        return float("nan")
    p = math.log(abs(v2 / v1)) / math.log(z2 / z1)
    if p >= -1.0:
        return float("nan")
    return -v2 * z2 / (p + 1.0)


# ---------------------------------------------------------------------------
# I(alpha, beta)

def I_integrand_lower(cp, params):
    """Integrand of I_1 with respect to x (includes dy/dx = Y/X)."""
    mu, a = params.mu, params.alpha
    x, y, A, X, Z, Y = cp.x, cp.y, cp.A, cp.X, cp.Z, cp.Ycap
    br = (a * x ** 2 / y ** 2 * Y ** 2 / X ** 3 - 6 * a * x / (y * X ** 2) - 3 * (1 - a) / X
          - 2 * (1 - a * mu * x ** 3 / y) * (3 * A + 1 - a) / X ** 2)
    F = x ** 4 / y ** 4 * (mu * x ** 2 * (A - a) / (y * X ** 2) - 2 * (1 - Y ** 2) / (y * X ** 2)
                           + 2 * (1 - Y) / (x * X) - 0.5 * mu * x * br)
    return 2 * F * Y / X


def I_integrand_upper(cp, params):
    """Integrand of I_2 with respect to x (includes dy/dx = -Y/Z)."""
    mu, a = params.mu, params.alpha
    x, y, A, X, Z, Y = cp.x, cp.y, cp.A, cp.X, cp.Z, cp.Ycap
    br = (a * x ** 2 / y ** 2 * Y ** 2 / Z ** 3 + 6 * a * x / (y * Z ** 2) - 3 * (1 - a) / Z
          - 2 * (1 + a * mu * x ** 3 / y) * (3 * A + 1 - a) / Z ** 2)
    F = x ** 4 / y ** 4 * (2 * Y ** 2 / (y * Z ** 2) + 2 * Y / (x * Z) + 0.5 * mu * x * br)
    return -2 * F * Y / Z


@dataclass(frozen=True)
class SearchPoint:
    alpha: float
    beta: float
    mu_eval: float
    I1: float
    I2: float
    I: float
    admissible: bool
    E: float = float("nan")
    dE_dalpha: float = float("nan")
    dE_dbeta: float = float("nan")
    meta: dict = field(default_factory=dict, compare=False)


def compute_I(alpha, beta, mu_eval=MU_EVAL):
    """I_1, I_2 and I = I_1 + I_2 at (alpha, beta), evaluated at finite mu.

    The recipe is applied on the whole parameter square.  Where Z_cr <= 0 the
    chart jumps at x_cr; the point is then flagged `admissible=False`.
    """
    if not mu_eval <= 1e-6:
        raise ValueError("mu_eval must be small (<= 1e-6)")
    p = CoordParams(mu_eval, alpha, beta)
    cr = p.critical
    zl, wl = _panel_nodes(_lower_edges())
    zu, wu = _panel_nodes(_upper_edges())
    xl, xu = zl * cr.x_cr, zu * cr.x_cr
    fl = I_integrand_lower(chart_point(xl, p), p) * cr.x_cr
    fu = I_integrand_upper(chart_point(xu, p), p) * cr.x_cr
    I1 = float(np.dot(wl, fl))
    I2 = float(np.dot(wu, fu))
    tail = _tail(fu, zu, I2)
    if not np.isfinite(tail) or abs(tail) > 1e-10 * max(1.0, abs(I2)):
        warnings.warn(f"I_2 tail estimate {tail:.3g} at ({alpha}, {beta})", QuadratureWarning)
    if np.isfinite(tail):
        I2 += tail
    meta = {"gl_points": _GL_N, "lower_nodes": int(zl.size), "upper_nodes": int(zu.size),
            "tail": tail, "gamma": cr.gamma, "Z_cr": cr.Z_cr}
    return SearchPoint(float(alpha), float(beta), float(mu_eval), I1, I2, I1 + I2,
                       bool(cr.admissible), meta=meta)


def compute_I_quad(alpha, beta, mu_eval=MU_EVAL, epsrel=1e-10):
    """Same integrals by adaptive quadrature in z (scalar chart calls)."""
    p = CoordParams(mu_eval, alpha, beta)
    xcr = p.critical.x_cr

    def fl(z):
        return float(I_integrand_lower(chart_point(z * xcr, p), p)[0]) * xcr

    def fu(z):
        return float(I_integrand_upper(chart_point(z * xcr, p), p)[0]) * xcr

    I1 = quad(fl, 0.0, 1.0, limit=400, epsabs=1e-13, epsrel=epsrel)[0]
    I2 = (quad(fu, 1.0, 2.0, limit=400, epsabs=1e-13, epsrel=epsrel)[0]
          + quad(fu, 2.0, np.inf, limit=400, epsabs=1e-13, epsrel=epsrel)[0])
    return I1, I2, I1 + I2


def compute_I_in_y(alpha, beta, mu_eval=MU_EVAL, epsrel=1e-10):
    """I integrated in the original variable y (admissible charts only).

    Adaptive quadrature in ln y on each side of y_cr; x(y) has a square-root
    branch point at y_cr which QAGS extrapolation handles.
    """
    p = CoordParams(mu_eval, alpha, beta)
    lcr = math.log(p.critical.y_cr)

    def g(s, upper):
        y = np.array([math.exp(s)])
        x, up = map_y_to_x(y, p)
        up = np.array([upper])
        cp = _chart_from(x, y, up, p)
        if upper:
            val = I_integrand_upper(cp, p) / (-cp.Ycap / cp.Z)
        else:
            val = I_integrand_lower(cp, p) / (cp.Ycap / cp.X)
        return float(val[0]) * y[0]

    I1 = quad(g, lcr - 40.0, lcr, args=(False,), limit=400, epsabs=1e-13, epsrel=epsrel)[0]
    I2 = quad(g, lcr, lcr + 40.0, args=(True,), limit=400, epsabs=1e-13, epsrel=epsrel)[0]
    return I1, I2, I1 + I2


# ---------------------------------------------------------------------------
# scans and curves

def _threads():
    try:
        return max(1, int(os.environ.get("WAVEMAP_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def scan(alphas, betas, mu_eval=MU_EVAL, threads=None):
    """I on a grid; results ordered by (alpha, beta) regardless of thread count."""
    keys = sorted({(float(a), float(b)) for a in alphas for b in betas})
    n = threads or _threads()

    def one(k):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", QuadratureWarning)
                return compute_I(k[0], k[1], mu_eval)
        except ChartError as e:
            nan = float("nan")
            return SearchPoint(k[0], k[1], mu_eval, nan, nan, nan, False, meta={"error": str(e)})

    if n == 1:
        return [one(k) for k in keys]
    with ThreadPoolExecutor(n) as ex:
        return list(ex.map(one, keys))


@dataclass(frozen=True)
class CurvePoint:
    abscissa: float
    roots: tuple          # sorted roots, labelled lower/upper by position
    samples: int

    @property
    def lower(self):
        return self.roots[0] if self.roots else float("nan")

    @property
    def upper(self):
        return self.roots[-1] if len(self.roots) > 1 else float("nan")


def _roots_on_line(fn, grid, xtol=1e-7):
    vals = np.array([fn(g) for g in grid])
    roots = []
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0:
            while b - a > xtol:
                m = 0.5 * (a + b)
                fm = fn(m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            roots.append(0.5 * (a + b))
    return tuple(roots), vals


def trace_curve(direction, values, other_range, samples=41, mu_eval=MU_EVAL, I_fn=None):
    """Roots of I = 0 along lines of fixed beta (alpha_of_beta) or fixed alpha.

    Returns one CurvePoint per abscissa with 0, 1 or 2 (or more) roots found
    by sign changes on a `samples`-point grid followed by bisection.
    """
    if direction not in ("alpha_of_beta", "beta_of_alpha"):
        raise ValueError("direction must be 'alpha_of_beta' or 'beta_of_alpha'")
    I_fn = I_fn or (lambda a, b: _safe_I(a, b, mu_eval))
    grid = np.linspace(other_range[0], other_range[1], samples)
    out = []
    for v in values:
        if direction == "alpha_of_beta":
            fn = lambda a, v=v: I_fn(a, v)
        else:
            fn = lambda b, v=v: I_fn(v, b)
        roots, _ = _roots_on_line(fn, grid)
        out.append(CurvePoint(float(v), roots, samples))
    return out


def _safe_I(a, b, mu_eval):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", QuadratureWarning)
            return compute_I(a, b, mu_eval).I
    except ChartError:
        return float("nan")


@dataclass(frozen=True)
class WedgePoint:
    alpha0: float
    beta0: float

    @property
    def a(self):
        return self.beta0 ** 2 * math.exp(-2.0)


def find_wedge(beta_range=(0.05, 1.6), alpha_range=(0.0, 1.0), n_beta=32, samples=41,
               mu_eval=MU_EVAL, I_fn=None, tol=1e-6):
    """Fold of the double-valued curve I = 0: the largest beta carrying roots.

    Coarse scan in beta for the 2 -> 0 root-count transition, bisection on
    the root count, then a quadratic fit of beta against the branch midpoint.
    """
    I_fn = I_fn or (lambda a, b: _safe_I(a, b, mu_eval))
    betas = np.linspace(beta_range[0], beta_range[1], n_beta)
    curve = trace_curve("alpha_of_beta", betas, alpha_range, samples, mu_eval, I_fn)
    counts = [len(c.roots) for c in curve]
    with_roots = [i for i, n in enumerate(counts) if n > 0]
    if not with_roots:
        finite = [I_fn(a, b) for b in betas[:: max(1, n_beta // 8)] for a in np.linspace(*alpha_range, 5)]
        finite = np.array(finite, dtype=float)
        finite = finite[np.isfinite(finite)]
        diag = {"betas": betas.tolist(), "root_counts": counts,
                "I_min": float(finite.min()) if finite.size else float("nan"),
                "I_max": float(finite.max()) if finite.size else float("nan")}
        raise FoldNotFound("I(alpha, beta) has no zero on the scanned region", diag)
    i = with_roots[-1]
    if i == len(betas) - 1:
        raise FoldNotFound("roots persist to the end of the beta range; widen it",
                           {"root_counts": counts})
    lo, hi = betas[i], betas[i + 1]
    last = curve[i]
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        c = trace_curve("alpha_of_beta", [m], alpha_range, samples, mu_eval, I_fn)[0]
        if c.roots:
            lo, last = m, c
        else:
            hi = m
    alpha0 = 0.5 * (last.roots[0] + last.roots[-1])
    return WedgePoint(float(alpha0), float(0.5 * (lo + hi)))


def branch_gap(beta0, eps, alpha_range=(0.0, 1.0), samples=81, mu_eval=MU_EVAL, I_fn=None):
    """Distance between the two alpha-roots at beta0 - eps (nan if fewer than two)."""
    c = trace_curve("alpha_of_beta", [beta0 - eps], alpha_range, samples, mu_eval, I_fn)[0]
    return c.upper - c.lower if len(c.roots) >= 2 else float("nan")


# ---------------------------------------------------------------------------
# energy

def on_shell_state(beta, lam_dot_sq=LAM_DOT_SQ_E, lam=1.0):
    return ModulationState(lam, -math.sqrt(lam_dot_sq), mu_from_law(lam_dot_sq, beta))


@dataclass(frozen=True)
class EnergyParts:
    delta_E: float        # E - 2 (energy of the kink)
    kinetic: float        # coefficient of lam_dot^2 in E
    static: float         # delta_E - lam_dot^2 * kinetic
    admissible: bool


def _energy_nodes(cr):
    zl, wl = _panel_nodes(_lower_edges(z_min=1e-12, per_decade=4))
    zu, wu = _panel_nodes(_upper_edges())
    return zl * cr.x_cr, wl * cr.x_cr, zu * cr.x_cr, wu * cr.x_cr


def energy_parts(alpha, beta, state):
    """Energy of U(y(x)) relative to the kink, split by powers of lam_dot.

        E = 2 int rho/(1+y^2)^2 { y_t^2 + y_rho^2 + y^2/rho^2 } drho,

    with lam = 1 so rho = x and y_t = -lam_dot x y'.  The kink density
    4x/(1+x^2)^2 is subtracted pointwise.
    """
    p = CoordParams(state.mu, alpha, beta)
    xl, wl, xu, wu = _energy_nodes(p.critical)
    x = np.concatenate([xl, xu])
    w = np.concatenate([wl, wu])
    cp = _chart_from(x, *_y_on_nodes(xl, xu, p), p)
    yp = cp.dy_dx
    q = (1 + cp.y ** 2) ** 2
    kin = 2 * x ** 3 * yp ** 2 / q
    y2x2 = (cp.y / x) ** 2
    # static part minus the kink density, arranged to avoid cancellation at small x
    stat = 2 * x * ((yp ** 2 + y2x2) / q - 2.0 / (1 + x * x) ** 2)
    K = float(np.dot(w, kin))
    S = float(np.dot(w, stat))
    return EnergyParts(S + state.lam_dot_sq * K, K, S, bool(p.critical.admissible))


def _y_on_nodes(xl, xu, p):
    from .coords import map_x_to_y
    yl, ul = map_x_to_y(xl, p)
    yu, uu = map_x_to_y(xu, p)
    return np.concatenate([yl, yu]), np.concatenate([ul, uu])


def energy_E(alpha, beta, state):
    """delta E = E(alpha, beta) - E(kink)."""
    return energy_parts(alpha, beta, state).delta_E


def energy_gradients(alpha, beta, state):
    """(dE/dalpha, dE/dbeta) from the closed-form lam_dot^2 integrals at fixed mu.

    These keep only the terms proportional to lam_dot^2 with 1 + y^2 -> y^2.
    """
    mu, ld2 = state.mu, state.lam_dot_sq
    p = CoordParams(mu, alpha, beta)
    cr = p.critical
    a = alpha
    xl, wl, xu, wu = _energy_nodes(cr)
    lo = chart_point(xl, p)
    up = chart_point(xu, p)
    Xc = cr.X_cr
    lr = math.log(cr.y_cr / cr.x_cr)

    # below x_cr
    x, y, A, X, Y = lo.x, lo.y, lo.A, lo.X, lo.Ycap
    k = 3 + a * mu * x ** 4 / (2 * y ** 2) * Y / X
    pre = x ** 5 * mu * Y / (2 * y ** 4 * X ** 3)
    gb_lo = pre / beta * (k - 2 * x * Y / y)
    lyx = np.log(y / x)
    ga_lo = pre * (mu * x ** 3 / y * (A + 0.5) - lyx * k + 2 * x / y * lyx * Y)

    # above x_cr
    x, y, A, Z, Y = up.x, up.y, up.A, up.Z, up.Ycap
    k = 3 + a * mu * x ** 4 / (2 * y ** 2) * Y / Z
    pre = x ** 2 * mu * Y / (2 * y ** 4 * Z ** 2)
    Bb = 2 * cr.x_cr ** 3 / Xc - x ** 3
    gb_up = -pre / beta * ((k / Z * Bb - 6 * cr.x_cr ** 3 / Xc) + 2 * x / y * Y / Z * Bb)
    Ba = 2 * cr.x_cr ** 3 * lr / Xc - x ** 3 * np.log(y / x)
    ga_up = pre * (k / Z * Ba - 6 * cr.x_cr ** 3 * lr / Xc
                   + x ** 3 / (y * Z) * (2 * cr.y_cr - mu * x ** 3 * (A + 0.5))
                   + 2 * x / y * Y / Z * Ba)

    dEb = 4 * ld2 * (np.dot(wl, gb_lo) + np.dot(wu, gb_up))
    dEa = 4 * ld2 * (np.dot(wl, ga_lo) + np.dot(wu, ga_up))
    return float(dEa), float(dEb)


def energy_gradients_fd(alpha, beta, state, h=1e-4, kinetic_only=True):
    """Central differences of the energy at fixed mu.

    With kinetic_only the lam_dot^2 coefficient is differenced, which is the
    part the closed forms describe.
    """
    def E(a, b):
        e = energy_parts(a, b, state)
        return state.lam_dot_sq * e.kinetic if kinetic_only else e.delta_E

    dEa = (E(alpha + h, beta) - E(alpha - h, beta)) / (2 * h)
    dEb = (E(alpha, beta + h) - E(alpha, beta - h)) / (2 * h)
    return dEa, dEb


def phi(alpha, beta, dalpha_dbeta, state):
    """dE/dbeta + dE/dalpha * dalpha/dbeta along a branch of I = 0."""
    dEa, dEb = energy_gradients(alpha, beta, state)
    return dEb + dEa * dalpha_dbeta


def branch_slope(curve_points, beta, which="lower"):
    """d(alpha)/d(beta) at beta from a local quadratic fit of a traced branch."""
    pts = [(c.abscissa, c.lower if which == "lower" else c.upper) for c in curve_points]
    pts = np.array([q for q in pts if np.isfinite(q[1])])
    if len(pts) < 3:
        raise FoldNotFound("not enough branch points for a slope", {"points": len(pts)})
    order = np.argsort(np.abs(pts[:, 0] - beta))[:5]
    c = np.polyfit(pts[order, 0] - beta, pts[order, 1], 2)
    return float(c[1])
