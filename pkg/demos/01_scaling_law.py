"""
The scaling law for the kink width
==================================

Integrate lambda * lambda_ddot = a f^{-1}(lambda_dot^2 / a) from a slowly
collapsing start, compare the blowup time with the quadrature, and watch the
log-log approach to the universal profile.
"""
import math

import numpy as np

from wavemap.blowup_law import (
    A_DEFAULT, asymptotic_profile, blowup_time_quadrature, energy_along, g_of, integrate_scaling_ode,
)

# g solves g = ln(g/z); it is the workhorse behind f^{-1}
z = np.array([1e-6, 1e-3, 0.1, 1 / math.e])
print("g(z):", g_of(z))

traj = integrate_scaling_ode(1.0, -0.1, a=A_DEFAULT)
k = traj.constants()
print(f"c = {k.c:.6g}, t* (ODE) = {k.t_star:.10f}")
print(f"t* (quadrature) = {blowup_time_quadrature(1.0, k.c) / math.sqrt(A_DEFAULT):.10f}")

# the Hamiltonian and the first integral are constants of the motion
_, E = energy_along(traj, every=25)
print(f"energy drift {np.ptp(E):.2e}, first-integral drift {np.abs(traj.first_integral()).max():.2e}")

# remaining time at tiny lambda: exact vs the three-term expansion
for L in (25.0, 100.0, 400.0):
    lam = k.c * math.exp(-L)
    exact = blowup_time_quadrature(lam, k.c)
    approx = asymptotic_profile(lam, k.c).three_term
    print(f"ln(c/lambda) = {L:5.0f}: relative error of the expansion {abs(approx / exact - 1):.2e}")
