"""
The deformed coordinate y(x)
============================

For small mu the map x -> y is the identity near the core and bends over at
x_cr, where the two defining relations meet.  Admissible charts join the two
branches continuously.
"""
import numpy as np

from wavemap.coords import CoordParams, beta_max, chart_point, map_y_to_x

p = CoordParams(1e-6, 0.65436, 1.04)
cr = p.critical
print(f"gamma = {cr.gamma:.8f}, x_cr = {cr.x_cr:.6f}, y_cr = {cr.y_cr:.6f}, admissible = {cr.admissible}")

x = np.geomspace(1e-2, 1e2, 9) * cr.x_cr
cp = chart_point(x, p)
for xi, yi, b, chi in zip(cp.x, cp.y, cp.branch, cp.chi):
    print(f"x = {xi:12.5g}  y = {yi:12.5g}  {b:5s}  chi = {chi: .3e}")

# the inverse map recovers x
xb, _ = map_y_to_x(cp.y, p)
print("round trip max rel error:", np.max(np.abs(xb / x - 1)))

# where the upper branch stops joining y_cr
for a in (0.3, 0.5, 0.8, 1.0):
    print(f"beta_max({a}) = {beta_max(a):.4f}")
