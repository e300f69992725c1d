"""A walk through the per-frequency profiles.

For each order the profile is built twice, once from the Bessel closed form
and once by the collocation solver, and the two are compared. The energy
constant J and the Neumann constant c come out of both routes.

Run with ``python3 demos/profile_tour.py``.
"""

import math

import numpy as np

from fraclab import boundary_derivative_table, make_order, solve_profile_bvp, solve_profile_closed_form


def gamma_J(g):
    # J = m! 2^(1-2s) Gamma(1-s) / Gamma(gamma), s the fractional part
    m = math.floor(g)
    s = g - m
    return math.factorial(m) * 2 ** (1 - 2 * s) * math.gamma(1 - s) / math.gamma(g)


print(f"{'gamma':>6} {'m':>2} {'b':>6} {'J closed':>12} {'J bvp':>12} {'Gamma formula':>14} {'c':>10} {'route gap':>10}")
for g in (0.3, 0.5, 1.3, 1.5, 2.5, 2.7):
    o = make_order(g)
    pc = solve_profile_closed_form(o)
    pb = solve_profile_bvp(o)
    gap = np.max(np.abs(pc.phi - np.interp(pc.y, pb.y, pb.phi)))
    print(f"{g:6.2f} {o.m:2d} {o.b:6.2f} {pc.J_value:12.8f} {pb.J_value:12.8f} "
          f"{gamma_J(g):14.8f} {pc.neumann_c:10.5f} {gap:10.1e}")

# at half-integer orders the profile is elementary
p = solve_profile_closed_form(make_order(1.5))
print("\ngamma=1.5 against (1+y)exp(-y):",
      f"{np.max(np.abs(p.phi - (1 + p.y) * np.exp(-p.y))):.1e}")

print("\nEven boundary derivatives, measured vs Frobenius vs product formula")
for g in (1.5, 2.5, 2.7):
    for row in boundary_derivative_table(solve_profile_closed_form(make_order(g))):
        flag = "  <- product differs" if row.discrepancy else ""
        print(f"  gamma={g} order {row.order}: {row.measured:+.8f} {row.frobenius:+.8f} "
              f"{row.product_formula:+.8f}{flag}")
