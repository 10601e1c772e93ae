"""Command-line entry point: ``wavemap <verb> ...``.

Every run writes its outputs under --out PREFIX plus a PREFIX_config.json
sidecar holding the full resolved configuration.  Floats in CSV files are
written with 17 significant digits; nothing time- or RNG-dependent enters
the numeric outputs, so identical configurations give identical files.

Exit codes: 0 success, 1 usage error, 2 selftest failure, 3 computation
failed (for example no fold found by ``search wedge``).
"""
import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_FAIL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return format(float(v) + 0.0, ".17g")


def write_csv(path, header, columns):
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in cols) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sidecar(args, extra=None):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    cfg["version"] = __version__
    if extra:
        cfg.update(extra)
    write_json(f"{args.out}_config.json", cfg)


def _plot_script(path, csv, xcol, ycols, title):
    lines = ["set datafile separator ','", f"set title '{title}'", "set key autotitle columnhead"]
    plots = ", ".join(f"'{os.path.basename(csv)}' using {xcol}:{c} with lines" for c in ycols)
    lines.append(f"plot {plots}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _range(spec):
    """'lo:hi:n' -> linspace, or a comma list."""
    if ":" in spec:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    return np.array([float(s) for s in spec.split(",")])


# ---------------------------------------------------------------------------
# verbs

def cmd_law(args):
    from .blowup_law import integrate_scaling_ode, energy_along, asymptotic_profile, fig1_coordinates
    traj = integrate_scaling_ode(args.lambda0, args.lambda_dot0, args.a, stop_ratio=args.stop_ratio)
    _, E = energy_along(traj)
    write_csv(f"{args.out}_trajectory.csv", ["t", "lambda", "lambda_dot", "mu", "E"],
              [traj.t, traj.lam, traj.lam_dot, traj.mu, E])
    const = traj.constants()
    write_json(f"{args.out}_constants.json",
               {"a": const.a, "c": const.c, "t_star": const.t_star, "b": const.b})
    _sidecar(args)
    if args.plot_script:
        _plot_script(f"{args.out}.gp", f"{args.out}_trajectory.csv", 1, [2], "lambda(t)")
    return EXIT_OK


def cmd_coords(args):
    from .coords import CoordParams, chart_point, chi_combo_from
    p = CoordParams(args.mu, args.alpha, args.beta)
    cr = p.critical
    x = np.logspace(math.log10(args.x_min), math.log10(args.x_max_factor * cr.x_cr), args.n)
    cp = chart_point(x, p)
    write_csv(f"{args.out}_coords.csv", ["x", "y", "branch", "chi", "chi_combo", "A", "X", "Z", "Ycap"],
              [cp.x, cp.y, cp.branch, cp.chi, chi_combo_from(cp, p), cp.A, cp.X, cp.Z, cp.Ycap])
    _sidecar(args, {"gamma": cr.gamma, "x_cr": cr.x_cr, "y_cr": cr.y_cr,
                    "X_cr": cr.X_cr, "Z_cr": cr.Z_cr, "admissible": cr.admissible})
    if args.plot_script:
        _plot_script(f"{args.out}.gp", f"{args.out}_coords.csv", 1, [2], "y(x)")
    return EXIT_OK


def cmd_psi(args):
    from .blowup_law import mu_from_law
    from .coords import CoordParams
    from .source_term import ModulationState, psi_on_y_grid
    mu = args.mu if args.mu is not None else mu_from_law(args.lambda_dot_sq, args.beta)
    p = CoordParams(mu, args.alpha, args.beta)
    state = ModulationState(1.0, -math.sqrt(args.lambda_dot_sq), mu)
    y_max = min(args.y_max, p.critical.y_cr * (1 - 1e-12)) if not p.critical.admissible else args.y_max
    y = np.logspace(math.log10(args.y_min), math.log10(y_max), args.n)
    tab = psi_on_y_grid(y, state, p)
    write_csv(f"{args.out}_psi.csv", ["x", "y", "psi", "psi1", "psi2"],
              [tab.x, tab.y, tab.psi, tab.psi1, tab.psi2])
    _sidecar(args, {"state": {"lam": 1.0, "lam_dot": state.lam_dot, "mu": mu},
                    "params": {"mu": mu, "alpha": args.alpha, "beta": args.beta}})
    return EXIT_OK


def selftest_checks():
    """(name, passed, detail) for the quick anchor checks."""
    from .blowup_law import g_of, E_INV
    from .linear_operator import appendix2_integrals, wronskian
    from .param_search import compute_I
    out = []
    i1, i2 = appendix2_integrals()
    out.append(("moment_integrals", abs(i1 - 0.25) < 1e-8 and abs(i2 - 0.125) < 1e-8, f"{i1!r} {i2!r}"))
    y = np.array([0.1, 1.0, 10.0])
    err = float(np.max(np.abs(wronskian(y) * y - 1.0)))
    out.append(("wronskian", err < 1e-12, f"max rel err {err:.3g}"))
    z = np.linspace(1e-6, E_INV * (1 - 1e-9), 1000)
    g = g_of(z)
    err = float(np.max(np.abs(g - np.log(g / z))))
    out.append(("g_functional_equation", err < 1e-10, f"max residual {err:.3g}"))
    vals = [compute_I(0.0, b).I for b in (0.3, 0.5, 1.0)]
    err = max(abs(v - 1.0) for v in vals)
    out.append(("I_alpha0", err < 1e-3, f"max |I-1| {err:.3g}"))
    return out


def cmd_selftest(args):
    ok = True
    for name, passed, detail in selftest_checks():
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_CHECK


def cmd_search(args):
    from .param_search import scan, trace_curve, find_wedge, FoldNotFound
    if args.search_verb == "scan":
        pts = scan(_range(args.alphas), _range(args.betas), args.mu, args.threads)
        write_csv(f"{args.out}_scan.csv", ["alpha", "beta", "mu", "I1", "I2", "I"],
                  [[p.alpha for p in pts], [p.beta for p in pts], [p.mu_eval for p in pts],
                   [p.I1 for p in pts], [p.I2 for p in pts], [p.I for p in pts]])
        _sidecar(args, {"admissible": [[p.alpha, p.beta, p.admissible] for p in pts]})
        return EXIT_OK
    if args.search_verb == "curve":
        lo, hi = (float(s) for s in args.alpha_range.split(":"))
        curve = trace_curve("alpha_of_beta", _range(args.betas), (lo, hi), args.samples, args.mu)
        write_csv(f"{args.out}_curve.csv", ["beta", "alpha_lower", "alpha_upper"],
                  [[c.abscissa for c in curve], [c.lower for c in curve], [c.upper for c in curve]])
        _sidecar(args, {"root_counts": [len(c.roots) for c in curve]})
        return EXIT_OK
    # wedge
    tol = {"beta0": 0.02, "alpha0": 0.01, "a": 0.006}
    try:
        w = find_wedge(mu_eval=args.mu)
    except FoldNotFound as e:
        write_json(f"{args.out}_wedge.json", {"alpha0": None, "beta0": None, "a": None,
                                              "tolerances": tol, "error": str(e),
                                              "diagnostics": e.diagnostics})
        _sidecar(args)
        print(f"search wedge: {e}", file=sys.stderr)
        return EXIT_FAIL
    write_json(f"{args.out}_wedge.json", {"alpha0": w.alpha0, "beta0": w.beta0, "a": w.a, "tolerances": tol})
    _sidecar(args)
    return EXIT_OK


def _model(args):
    from .linear_operator import KinkModel, POLYNOMIAL
    return POLYNOMIAL if args.model == "poly" else KinkModel("sine", args.k)


def _simulate_and_fit(args):
    from .pde_sim import simulate, fit_blowup, fig1_table
    res = simulate(_model(args), args.lambda0, args.lambda_dot0, N=args.N, R=args.R, cfl=args.cfl)
    res.to_csv(f"{args.out}_series.csv")
    fit = None
    if args.model == "sine":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_blowup(res.t, res.lam)
        write_json(f"{args.out}_fit.json", fit.to_dict())
        tab = fig1_table(res.t, res.lam, fit)
        write_csv(f"{args.out}_fig1.csv", ["x", "y", "y_analytic"], tab.T)
    return res, fit


def cmd_simulate(args):
    res, fit = _simulate_and_fit(args)
    _sidecar(args, {"run": res.params, "stop_reason": res.reason})
    if args.plot_script and fit is not None:
        _plot_script(f"{args.out}.gp", f"{args.out}_fig1.csv", 1, [2, 3], "log-log blowup profile")
    return EXIT_OK


def cmd_fig1(args):
    if args.model != "sine":
        raise UsageError("fig1 needs the sine model")
    res, fit = _simulate_and_fit(args)
    _sidecar(args, {"run": res.params, "stop_reason": res.reason, "fit": fit.to_dict()})
    if args.plot_script:
        _plot_script(f"{args.out}.gp", f"{args.out}_fig1.csv", 1, [2, 3], "log-log blowup profile")
    print(f"t* = {fit.t_star:.10g}  b = {fit.b:.6g}  rms = {fit.rms_residual:.3g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser():
    from .blowup_law import A_DEFAULT
    p = _Parser(prog="wavemap", description="Blowup of equivariant wave maps: numerical pipelines.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", parser_class=_Parser)

    def out(sp, default):
        sp.add_argument("--out", default=default, help="output prefix (default %(default)s)")
        sp.add_argument("--plot-script", action="store_true", help="also write PREFIX.gp for gnuplot")

    s = sub.add_parser("law", help="integrate the scaling ODE")
    s.add_argument("--lambda0", type=float, default=1.0)
    s.add_argument("--lambda-dot0", type=float, default=-0.1)
    s.add_argument("--a", type=float, default=A_DEFAULT)
    s.add_argument("--stop-ratio", type=float, default=1e-6)
    out(s, "law")
    s.set_defaults(func=cmd_law)

    s = sub.add_parser("coords", help="tabulate the coordinate map")
    s.add_argument("action", choices=["dump"])
    s.add_argument("--mu", type=float, default=1e-8)
    s.add_argument("--alpha", type=float, default=0.6)
    s.add_argument("--beta", type=float, default=0.6)
    s.add_argument("--x-min", type=float, default=1e-3)
    s.add_argument("--x-max-factor", type=float, default=10.0, help="x_max in units of x_cr")
    s.add_argument("--n", type=int, default=400)
    out(s, "coords")
    s.set_defaults(func=cmd_coords)

    s = sub.add_parser("psi", help="tabulate the source term")
    s.add_argument("action", choices=["dump"])
    s.add_argument("--lambda-dot-sq", type=float, default=1e-8)
    s.add_argument("--mu", type=float, default=None, help="default: from the law at beta")
    s.add_argument("--alpha", type=float, default=0.6)
    s.add_argument("--beta", type=float, default=1.04)
    s.add_argument("--y-min", type=float, default=1e-3)
    s.add_argument("--y-max", type=float, default=1e6)
    s.add_argument("--n", type=int, default=400)
    out(s, "psi")
    s.set_defaults(func=cmd_psi)

    s = sub.add_parser("selftest", help="quick anchor checks")
    s.set_defaults(func=cmd_selftest)

    s = sub.add_parser("search", help="I(alpha, beta) scans, curves and the fold")
    s.add_argument("search_verb", choices=["scan", "curve", "wedge"])
    s.add_argument("--alphas", default="0:1:11", help="lo:hi:n or comma list")
    s.add_argument("--betas", default="0.2:1.4:13", help="lo:hi:n or comma list")
    s.add_argument("--alpha-range", default="0:1")
    s.add_argument("--samples", type=int, default=41)
    s.add_argument("--mu", type=float, default=1e-8)
    s.add_argument("--threads", type=int, default=None, help="default: WAVEMAP_THREADS or CPU count")
    out(s, "search")
    s.set_defaults(func=cmd_search)

    for verb, helptext in (("simulate", "run the PDE"), ("fig1", "PDE run, fit and comparison table")):
        s = sub.add_parser(verb, help=helptext)
        s.add_argument("--model", choices=["sine", "poly"], default="sine")
        s.add_argument("--k", type=int, default=1)
        s.add_argument("--lambda0", type=float, default=1.0)
        s.add_argument("--lambda-dot0", type=float, default=-0.1)
        s.add_argument("--N", type=int, default=8192)
        s.add_argument("--R", type=float, default=None, help="default 50*lambda0")
        s.add_argument("--cfl", type=float, default=0.5)
        out(s, verb)
        s.set_defaults(func=cmd_simulate if verb == "simulate" else cmd_fig1)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
