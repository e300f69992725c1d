"""Finite part of the divergent energy at gamma = 1.5.

The integral of y^-2 |grad U|^2 over y > eps blows up as eps -> 0. After
the divergent term is removed, the remainder is extrapolated to eps = 0 and
compared with half the bulk integral of (Delta U)^2.
"""

import numpy as np

from fraclab import (BoundaryFunction, XGrid, extend, make_order, regularized_energy_limit,
                     solve_profile_closed_form)

grid = XGrid(1, 256)
p = solve_profile_closed_form(make_order(1.5))
rep = regularized_energy_limit(extend(BoundaryFunction(grid, np.cos(grid.nodes)), p))
for eps, est in zip(rep.epsilons, rep.finite_part_estimates):
    print(f"eps = {eps:.4e}  finite part estimate = {est:.8f}  gap = {abs(est - rep.bulk_energy_half):.2e}")
print(f"extrapolated limit {rep.extrapolated_limit:.8f}")
print(f"half bulk energy   {rep.bulk_energy_half:.8f}")
print(f"relative gap       {rep.relative_discrepancy:.1e}")
