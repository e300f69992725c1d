"""Almgren frequency of an extension and vanishing orders of traces.

The frequency N(r) of a harmonic polynomial equals its degree. For the
extension of a Gaussian bump the scan reports the smallest Lambda making
exp(Lambda r) N(r) nondecreasing. The last part recovers planted vanishing
orders from boundary data.
"""

import numpy as np

from fraclab import (AnalyticField, BoundaryFunction, XGrid, ball_quadrature, compute_N, extend,
                     frequency_scan, make_order, monotonicity_check, solve_profile_closed_form,
                     vanishing_order)

quad = ball_quadrature((0.0, 0.0), 0.5, 0.0)
linear = AnalyticField(0.0, [(lambda x, y: x, lambda x, y: (np.ones_like(x), np.zeros_like(x)))])
saddle = AnalyticField(0.0, [(lambda x, y: x ** 2 - y ** 2, lambda x, y: (2 * x, -2 * y))])
print(f"N for x: {compute_N(linear, quad):.10f}   N for x^2 - y^2: {compute_N(saddle, quad):.10f}")

grid = XGrid(1, 1024)
bump = BoundaryFunction(grid, np.exp(-(grid.nodes - np.pi) ** 2 / 0.5))
radii = np.linspace(0.1, 0.9, 9)
for g in (0.5, 1.5):
    rep = frequency_scan(extend(bump, solve_profile_closed_form(make_order(g))), (np.pi, 0.0), radii)
    ok, _ = monotonicity_check(rep, rep.Lambda_estimate)
    print(f"\ngamma = {g}: Lambda = {rep.Lambda_estimate:.3f}, monotone: {ok}")
    for r, n in zip(rep.radii, rep.N_values):
        print(f"  r = {r:.1f}  N = {n:.6f}")

fine = XGrid(1, 4096)
for k in (1, 2, 4):
    f = BoundaryFunction(fine, np.sin(fine.nodes - 2.0) ** (k - 1))
    print(f"planted order {k}: estimated {vanishing_order(f, 2.0, np.geomspace(0.5, 0.05, 8)):.3f}")
