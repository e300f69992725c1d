"""Extension energy and the Dirichlet-to-Neumann map on a periodic line.

A few traces are extended into the half plane. The weighted energy of the
extension divided by the fractional seminorm of the trace should not depend
on the trace; it equals J. The weighted normal derivative at the boundary,
divided by c, reproduces the spectral fractional Laplacian.
"""

import numpy as np

from fraclab import (BoundaryFunction, XGrid, extend, extension_energy, frac_laplacian_spectral,
                     make_order, neumann_trace, solve_profile_closed_form)

grid = XGrid(1, 1024)
x = grid.nodes
traces = {
    "cos x": np.cos(x),
    "cos x + cos 7x": np.cos(x) + np.cos(7 * x),
    "bump": np.exp(-(x - np.pi) ** 2 / 0.5),
    "exp(sin x)": np.exp(np.sin(x)),
}

for g in (0.5, 1.3, 2.7):
    o = make_order(g)
    p = solve_profile_closed_form(o)
    print(f"\ngamma = {g}   J = {p.J_value:.8f}   c = {p.neumann_c:.6f}")
    for name, v in traces.items():
        f = BoundaryFunction(grid, v)
        u = extend(f, p)
        ratio = extension_energy(u).ratio
        ref = frac_laplacian_spectral(f, o).values
        dtn = neumann_trace(u).values / p.neumann_c
        err = np.linalg.norm(dtn - ref) / np.linalg.norm(ref)
        print(f"  {name:16s} energy ratio {ratio:.8f}   Neumann rel. error {err:.1e}")
