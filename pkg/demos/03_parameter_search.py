"""
Searching for the selection point
=================================

The pair (alpha, beta) is to be fixed by I(alpha, beta) = 0.  Here we scan I
over the square, look for the fold of its zero set and, failing that, print
what the scan actually sees.
"""
import warnings

import numpy as np

from wavemap.param_search import (
    FoldNotFound, compute_I, compute_I_quad, energy_E, find_wedge, on_shell_state, scan,
)

warnings.simplefilter("ignore")

# three routes agree on the alpha = 0 line
for beta in (0.3, 0.5, 1.0):
    print(f"I(0, {beta}) = {compute_I(0.0, beta).I:.12f}   quad: {compute_I_quad(0.0, beta)[2]:.12f}")

pts = scan(np.linspace(0, 1, 5), np.linspace(0.2, 1.4, 7))
adm = np.array([p.I for p in pts if p.admissible])
print(f"{adm.size} admissible points, I in [{adm.min():.12f}, {adm.max():.12f}]")

try:
    w = find_wedge()
    print(f"wedge at alpha0 = {w.alpha0:.6f}, beta0 = {w.beta0:.6f}, a = {w.a:.5f}")
except FoldNotFound as e:
    print("no fold:", e, "| root counts per beta:", e.diagnostics["root_counts"][:8], "...")

# energy excess of the deformed kink, on shell, as lam_dot^2 halves
for ld2 in (1e-3, 5e-4, 2.5e-4):
    print(f"lam_dot^2 = {ld2:.1e}: dE = {energy_E(0.654, 1.04, on_shell_state(1.04, ld2)):.6e}")
