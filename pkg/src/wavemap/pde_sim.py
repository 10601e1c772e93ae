"""Radial semilinear wave equation  u_tt = u_rr + u_r/r - f(u)/r^2.

Vertex-centred finite volumes on a sinh-stretched grid (fine near the
origin), velocity-Verlet (leapfrog) in time.  The discrete energy

    E_h = sum m_i v_i^2/2 + sum c_{i+1/2} (u_{i+1}-u_i)^2/2 + sum m_i F(u_i)/r_i^2

is what the scheme conserves up to O(dt^2) oscillation; both end values of u
are held fixed, so the charge is exactly constant.
"""
from dataclasses import dataclass, field, replace
import math
import warnings

import numpy as np
from scipy.optimize import brentq, least_squares

from .blowup_law import A_DEFAULT
from .linear_operator import SINE, POLYNOMIAL, KinkModel


class SimulationError(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class FitWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# grid

@dataclass(frozen=True)
class Grid:
    rho: np.ndarray       # 0 = rho_0 < ... < rho_N = R
    m: np.ndarray         # dual cell areas / 2pi (zero at the ends, unused there)
    c_edge: np.ndarray    # rho_{i+1/2} / h_i

    @property
    def N(self):
        return self.rho.size - 1

    @property
    def R(self):
        return float(self.rho[-1])

    @property
    def h(self):
        return np.diff(self.rho)

    @property
    def h_min(self):
        return float(self.h.min())


def make_grid(N=8192, R=50.0, h_min=5e-4):
    """rho = A sinh(xi) on a uniform xi grid, A chosen so that the first cell is h_min."""
    if not R > h_min * N:
        # uniform spacing already gives cells no larger than h_min
        rho = np.linspace(0.0, R, N + 1)
    else:
        def first_cell(A):
            return A * math.sinh(math.asinh(R / A) / N) - h_min
        A = brentq(first_cell, 1e-12, 1e6 * R, xtol=1e-15, rtol=1e-14)
        xi = np.linspace(0.0, math.asinh(R / A), N + 1)
        rho = A * np.sinh(xi)
        rho[-1] = R
    mid = 0.5 * (rho[1:] + rho[:-1])
    m = np.zeros(N + 1)
    m[1:-1] = 0.5 * (mid[1:] ** 2 - mid[:-1] ** 2)
    c = mid / np.diff(rho)
    for a in (rho, m, c):
        a.setflags(write=False)
    return Grid(rho, m, c)


# ---------------------------------------------------------------------------
# fields

@dataclass(frozen=True)
class RadialField:
    grid: Grid
    u: np.ndarray
    v: np.ndarray
    t: float
    model: KinkModel = SINE

    @property
    def charge_raw(self):
        """(u(R) - u(0)) / span; differs from an integer by the truncated tail."""
        return float((self.u[-1] - self.u[0]) / self.model.charge_span)

    @property
    def charge(self):
        return int(round(self.charge_raw))


def _x_dU(model, x):
    # x U'(x): 2 zeta for the sine kink, -zeta for the polynomial one
    return 2 * model.zeta(x) if model.name == "sine" else -model.zeta(x)


def make_initial(model=SINE, lambda0=1.0, lambda_dot0=-0.1, grid=None, N=8192, R=None, h_min=None):
    """Kink of width lambda0 moving with d(lambda)/dt = lambda_dot0."""
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    if lambda_dot0 > 0:
        raise ValueError("lambda_dot0 must be non-positive")
    if grid is None:
        R = 50.0 * lambda0 if R is None else R
        grid = make_grid(N, R, 5e-4 * lambda0 if h_min is None else h_min)
    if lambda0 >= grid.R / 10:
        raise ValueError(f"lambda0 = {lambda0} too close to R = {grid.R}")
    x = grid.rho / lambda0
    u = np.asarray(model.U(x), dtype=float)
    v = -(lambda_dot0 / lambda0) * _x_dU(model, x)
    v[0] = v[-1] = 0.0
    return RadialField(grid, u, v, 0.0, model)


def acceleration(grid, u, model):
    a = np.zeros_like(u)
    flux = grid.c_edge * np.diff(u)
    r = grid.rho[1:-1]
    a[1:-1] = (flux[1:] - flux[:-1]) / grid.m[1:-1] - model.f(u[1:-1]) / (r * r)
    return a


def energy(field):
    g, u, v = field.grid, field.u, field.v
    r = g.rho[1:-1]
    kin = 0.5 * np.dot(g.m[1:-1], v[1:-1] ** 2)
    grad = 0.5 * np.dot(g.c_edge, np.diff(u) ** 2)
    pot = np.dot(g.m[1:-1], field.model.potential(u[1:-1]) / (r * r))
    return float(kin + grad + pot)


def static_residual(grid, model, lam=1.0):
    """Discrete acceleration of the exact kink; second order in the grid step."""
    u = np.asarray(model.U(grid.rho / lam), dtype=float)
    return acceleration(grid, u, model)


def step(field, dt, cfl_limit=1.0):
    """One velocity-Verlet step; returns a new field."""
    g = field.grid
    if dt > cfl_limit * g.h_min:
        raise ValueError(f"dt = {dt:.3g} exceeds CFL limit {cfl_limit} * h_min = {cfl_limit * g.h_min:.3g}")
    u = field.u.copy()
    v = field.v.copy()
    a = acceleration(g, u, field.model)
    v[1:-1] += 0.5 * dt * a[1:-1]
    u[1:-1] += dt * v[1:-1]
    a = acceleration(g, u, field.model)
    v[1:-1] += 0.5 * dt * a[1:-1]
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise SimulationError("non-finite field", {"t": field.t + dt})
    return replace(field, u=u, v=v, t=field.t + dt)


# ---------------------------------------------------------------------------
# measuring lambda

def _mid_value(model):
    return float(model.U(1.0))


def extract_lambda(field):
    """rho where u first crosses U(1) (pi/2 for the sine kink), linearly interpolated."""
    u, r = field.u, field.grid.rho
    d = u - _mid_value(field.model)
    s0 = np.sign(d[0]) if d[0] != 0 else -np.sign(d[-1])
    idx = np.nonzero(np.sign(d[1:]) != s0)[0]
    if idx.size == 0:
        raise SimulationError("u does not cross the kink midpoint", {"t": field.t})
    i = idx[0]
    return float(r[i] + (r[i + 1] - r[i]) * d[i] / (d[i] - d[i + 1]))


def extract_lambda_alt(field):
    """2 / u_r(0) from a cubic-in-rho fit u = c r + d r^3 on the first two nodes (sine k = 1)."""
    if not (field.model.name == "sine" and field.model.k == 1):
        return float("nan")
    r1, r2 = field.grid.rho[1], field.grid.rho[2]
    u1, u2 = field.u[1], field.u[2]
    c = (u1 * r2 ** 3 - u2 * r1 ** 3) / (r1 * r2 ** 3 - r2 * r1 ** 3)
    return float(2.0 / c)


# ---------------------------------------------------------------------------
# simulation driver

@dataclass
class SimResult:
    t: np.ndarray
    lam: np.ndarray
    lam_alt: np.ndarray
    energy: np.ndarray
    charge: np.ndarray
    charge_raw: np.ndarray
    final: RadialField
    reason: str
    params: dict = field(default_factory=dict)

    @property
    def energy_drift(self):
        return np.abs(self.energy / self.energy[0] - 1.0)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.t, self.lam, self.lam_alt, self.energy, self.charge]),
                   delimiter=",", header="t,lambda,lambda_alt,energy,charge", comments="", fmt="%.17g")


def simulate(model=SINE, lambda0=1.0, lambda_dot0=-0.1, N=8192, R=None, cfl=0.5, h_min=None,
             stop_ratio=None, t_max=None, record_every=20, points_per_lambda=16):
    """Evolve the collapsing kink until lambda is resolved by fewer than
    `points_per_lambda` cells, lambda/lambda0 < stop_ratio, or t_max.

    t_max defaults to R (beyond that, radiation reflected at the outer
    Dirichlet boundary can reach the core).
    """
    f0 = make_initial(model, lambda0, lambda_dot0, N=N, R=R, h_min=h_min)
    g = f0.grid
    dt = cfl * g.h_min
    if cfl > 1.0:
        raise ValueError("cfl must not exceed 1")
    t_max = g.R if t_max is None else t_max
    if t_max > 1.9 * g.R:
        raise ValueError("t_max lets boundary reflections reach the core")
    lam_floor = points_per_lambda * g.h_min
    if stop_ratio is not None:
        lam_floor = max(lam_floor, stop_ratio * lambda0)

    u, v = f0.u.copy(), f0.v.copy()
    a = acceleration(g, u, model)
    rows = []
    t = 0.0
    n = 0
    reason = "t_max"

    def record():
        fld = RadialField(g, u, v, t, model)
        lam = extract_lambda(fld)
        rows.append((t, lam, extract_lambda_alt(fld), energy(fld), fld.charge, fld.charge_raw))
        return lam

    record()
    while True:
        v[1:-1] += 0.5 * dt * a[1:-1]
        u[1:-1] += dt * v[1:-1]
        a = acceleration(g, u, model)
        v[1:-1] += 0.5 * dt * a[1:-1]
        t += dt
        n += 1
        if n % record_every == 0:
            if not np.all(np.isfinite(u)):
                raise SimulationError("non-finite field", {"t": t, "last": rows[-1]})
            try:
                lam = record()
            except SimulationError:
                reason = "dispersed"
                break
            if lam < lam_floor:
                reason = "resolution"
                break
            if t >= t_max:
                break
    arr = np.array(rows)
    params = {"model": model.name, "k": model.k, "lambda0": lambda0, "lambda_dot0": lambda_dot0,
              "N": g.N, "R": g.R, "h_min": g.h_min, "dt": dt, "cfl": cfl}
    return SimResult(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], arr[:, 5],
                     RadialField(g, u.copy(), v.copy(), t, model), reason, params)


# ---------------------------------------------------------------------------
# fitting the collapse

@dataclass(frozen=True)
class BlowupFit:
    t_star: float
    b: float
    rms_residual: float
    window: tuple          # (x_min, x_max), x = -ln(t* - t)
    n_points: int
    a: float = A_DEFAULT
    ill_conditioned: bool = False

    def to_dict(self):
        return {"t_star": self.t_star, "b": self.b, "rms_residual": self.rms_residual,
                "window": list(self.window), "n_points": self.n_points, "a": self.a,
                "ill_conditioned": self.ill_conditioned}


def fig1_residual(t, lam, t_star, b, a=A_DEFAULT):
    d = t_star - t
    x = -np.log(d)
    y = np.log(lam / d)
    return y - (0.5 * math.log(a) - np.sqrt(np.maximum(x + b, 0.0)))


def fit_blowup(t, lam, a=A_DEFAULT, decades=1.0, n_starts=30):
    """Fit (t*, b) of  ln(lam/(t*-t)) = ln(a)/2 - sqrt(-ln(t*-t) + b)
    over the points with lam <= 10**decades * lam_end.
    """
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if t.size < 3 or np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing (at least 3 samples)")
    span = math.log10(lam.max() / lam[-1])
    sel = lam <= 10 ** decades * lam[-1]
    tt, ll = t[sel], lam[sel]
    ill = span < 1.0
    if ill:
        warnings.warn(f"series covers only {span:.2f} decades of lambda", FitWarning)
    # rate at the end of the series sets the multistart range
    k = max(2, len(tt) // 20)
    rate = abs((ll[-1] - ll[-k]) / (tt[-1] - tt[-k]))
    horizon = 2 * ll[-1] / rate if rate > 0 else 1.0
    t_end = tt[-1]

    # t* = t_end + horizon * exp(q); t* - t is formed without cancellation
    back = t_end - tt
    la = 0.5 * math.log(a)

    def res(p):
        d = back + horizon * math.exp(p[0])
        return np.log(ll / d) - (la - np.sqrt(np.maximum(-np.log(d) + p[1], 0.0)))

    best = None
    for q0 in np.log(np.linspace(0.02, 1.0, n_starts)):
        for b0 in (-2.0, 0.0, 2.0, 5.0, 10.0):
            r = least_squares(res, [q0, b0], bounds=([-40.0, -50.0], [math.log(10.0), 1e4]),
                              xtol=1e-15, ftol=1e-15, gtol=1e-15)
            rms = float(np.sqrt(np.mean(r.fun ** 2)))
            if best is None or rms < best[0]:
                best = (rms, r.x)
    rms, (q, b) = best
    offset = horizon * math.exp(q)
    x = -np.log(back + offset)
    return BlowupFit(float(t_end + offset), float(b), rms, (float(x.min()), float(x.max())),
                     int(tt.size), a, ill)


def fig1_table(t, lam, fit):
    """Columns x, y (measured) and y_analytic on the fit window."""
    d = fit.t_star - np.asarray(t, dtype=float)
    x = -np.log(d)
    y = np.log(np.asarray(lam) / d)
    ya = 0.5 * math.log(fit.a) - np.sqrt(np.maximum(x + fit.b, 0.0))
    slack = 1e-12 * (1.0 + np.abs(x))
    keep = (x >= fit.window[0] - slack) & (x <= fit.window[1] + slack)
    return np.column_stack([x[keep], y[keep], ya[keep]])
