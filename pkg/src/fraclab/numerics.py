"""Small numerical kernels: graded meshes, weighted quadrature, stencils, extrapolation."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import ExtrapolationUnstable, InsufficientGrid

__all__ = [
    "graded_grid",
    "weighted_trapezoid_weights",
    "weighted_element_blocks",
    "weighted_element_matrices",
    "fornberg_weights",
    "derivative_matrix",
    "one_sided_derivative_at_zero",
    "extrapolate_to_zero",
    "richardson_table",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_GL_S = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def graded_grid(y_max: float, n: int, grading: float = 2.0) -> np.ndarray:
    """Nodes ``y_j = y_max (j/n)**grading`` for ``j = 0..n``."""
    if y_max <= 0 or n < 1:
        raise ValueError("graded_grid needs y_max > 0 and n >= 1")
    return y_max * (np.arange(n + 1) / n) ** grading


def _shape_functions(t0, t1, e, tt):
    # element basis linear in s = t**e
    s0 = t0 ** e
    ds = t1 ** e - s0
    n1 = (tt ** e - s0[:, None]) / ds[:, None]
    dn1 = e * tt ** (e - 1.0) / ds[:, None]
    return 1.0 - n1, n1, -dn1, dn1


def weighted_element_blocks(t, b, e_row=1.0, e_col=1.0, stiffness=False):
    """Local 2x2 element integrals, ``blocks[i][j][e]`` for element ``e``.

    See :func:`weighted_element_matrices` for the basis and quadrature.
    """
    t = np.asarray(t, dtype=float)
    t0, t1 = t[:-1], t[1:]
    h = t1 - t0
    # Gauss nodes are interior, so the origin element is finite here and
    # is overwritten with its closed form below
    tt = t0[:, None] + h[:, None] * _GL_S
    wt = tt ** b * _GL_W * h[:, None]
    a0, a1, da0, da1 = _shape_functions(t0, t1, e_row, tt)
    c0, c1, dc0, dc1 = _shape_functions(t0, t1, e_col, tt)
    if stiffness:
        prods = ((da0 * dc0, da0 * dc1), (da1 * dc0, da1 * dc1))
    else:
        prods = ((a0 * c0, a0 * c1), (a1 * c0, a1 * c1))
    local = [[(wt * prods[i][j]).sum(axis=1) for j in range(2)] for i in range(2)]

    if t0[0] == 0.0:
        T = t1[0]

        def mom(p):
            return T ** (b + p + 1.0) / (b + p + 1.0)

        er, ec = e_row, e_col
        if stiffness:
            v = er * ec * mom(er + ec - 2.0) / T ** (er + ec)
            local[0][0][0], local[0][1][0] = v, -v
            local[1][0][0], local[1][1][0] = -v, v
        else:
            local[1][1][0] = mom(er + ec) / T ** (er + ec)
            local[0][1][0] = (mom(ec) - mom(er + ec) / T ** er) / T ** ec
            local[1][0][0] = (mom(er) - mom(er + ec) / T ** ec) / T ** er
            local[0][0][0] = (mom(0.0) - mom(er) / T ** er - mom(ec) / T ** ec
                              + mom(er + ec) / T ** (er + ec))
    return local


def weighted_element_matrices(t, b, e_row=1.0, e_col=1.0, stiffness=False):
    """Assemble ``∫ t^b N_i N_j`` (or ``∫ t^b N_i' N_j'``) over a 1-D mesh.

    Basis functions on each element are linear in ``s = t**e``; ``e = 1``
    is the usual hat basis, ``e = 1 - b`` reproduces ``t^(1-b)`` exactly.
    The element touching ``t = 0`` is integrated in closed form, the others
    by 12-point Gauss-Legendre (the weight is smooth away from the origin).

    Returns a CSR matrix of shape ``(len(t), len(t))``.
    """
    t = np.asarray(t, dtype=float)
    n = t.size - 1
    local = weighted_element_blocks(t, b, e_row, e_col, stiffness)
    i = np.arange(n)
    rows = np.concatenate([i, i, i + 1, i + 1])
    cols = np.concatenate([i, i + 1, i, i + 1])
    vals = np.concatenate([local[0][0], local[0][1], local[1][0], local[1][1]])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n + 1, n + 1)).tocsr()


def weighted_trapezoid_weights(t, b: float, e: float = 1.0) -> np.ndarray:
    """Weights ``w_j`` with ``sum_j w_j g(t_j) = ∫ t^b I[g](t) dt``.

    ``I[g]`` is the piecewise interpolant linear in ``t**e``. With ``b = 0``
    and ``e = 1`` these are the ordinary trapezoid weights.
    """
    mass = weighted_element_matrices(t, b, e, e)
    return np.asarray(mass.sum(axis=1)).ravel()


def fornberg_weights(z: float, x: Sequence[float], m: int) -> np.ndarray:
    """Finite-difference weights at ``z`` on nodes ``x`` for derivatives 0..m.

    Fornberg's recursion; returns an array of shape ``(m + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _zero_sum(w: np.ndarray, nodes: np.ndarray, z: float) -> np.ndarray:
    # derivative weights annihilate constants; restore that exactly at the node nearest z
    w = w.copy()
    i = int(np.argmin(np.abs(nodes - z)))
    w[i] -= w.sum()
    return w


def derivative_matrix(y, order: int, width: int = 5, even_reflection: bool = True,
                      min_span: float = 0.0):
    """Sparse matrix applying a ``width``-point derivative on the grid ``y``.

    Near ``y = 0`` the stencil borrows mirrored nodes ``-y_i`` carrying the
    values at ``y_i`` (even extension, i.e. vanishing odd traces) when
    ``even_reflection`` is set; otherwise stencils become one-sided.
    Near the far end they are one-sided. Where the grid is finer than
    ``min_span / (width - 1)`` the stencil skips nodes so that it spans at
    least ``min_span``, keeping round-off (``~eps / span**order``) in check.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 4:
        raise InsufficientGrid(f"need at least 4 grid levels, got {n}")
    width = min(width, n)
    half = width // 2
    if even_reflection:
        ext = np.concatenate([-y[1:][::-1], y])
        idx = np.concatenate([np.arange(1, n)[::-1], np.arange(n)])
        offset = n - 1
    else:
        ext, idx, offset = y, np.arange(n), 0
    rows, cols, vals = [], [], []
    for j in range(n):
        c = j + offset
        stride = 1
        while True:
            start = min(max(c - half * stride, 0), ext.size - 1 - (width - 1) * stride)
            sl = slice(start, start + (width - 1) * stride + 1, stride)
            nodes = ext[sl]
            if nodes[-1] - nodes[0] >= min_span or (width - 1) * (stride + 1) >= ext.size:
                break
            stride += 1
        w = _zero_sum(fornberg_weights(y[j], nodes, order)[order], nodes, y[j])
        rows.extend([j] * width)
        cols.extend(idx[sl])
        vals.extend(w)
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def one_sided_derivative_at_zero(y, values, width: int = 5) -> np.ndarray:
    """First derivative at ``y[0]`` from the first ``width`` levels (last axis)."""
    y = np.asarray(y, dtype=float)
    if y.size < width:
        raise InsufficientGrid(f"need at least {width} grid levels")
    w = _zero_sum(fornberg_weights(y[0], y[:width], 1)[1], y[:width], y[0])
    return np.asarray(values)[..., :width] @ w


def extrapolate_to_zero(t, values, exponents, check_tol: float | None = None):
    """Limit as ``t -> 0`` of samples ``v(t_i) = c + sum_k a_k t_i**p_k``.

    ``values`` may carry leading axes; the last axis runs over ``t``. Uses the
    first ``len(exponents) + 1`` samples. When ``check_tol`` is given, the
    estimate is compared against the one obtained with the last exponent
    dropped, and :class:`ExtrapolationUnstable` is raised if they differ by
    more than ``check_tol`` relative to the data scale.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values)
    k = len(exponents) + 1
    if t.size < k:
        raise InsufficientGrid(f"need {k} samples for {len(exponents)} exponents")

    def _solve(ex):
        kk = len(ex) + 1
        A = np.column_stack([np.ones(kk)] + [t[:kk] ** p for p in ex])
        inv = np.linalg.inv(A)[0]
        return values[..., :kk] @ inv

    est = _solve(list(exponents))
    if check_tol is not None and len(exponents) > 0:
        coarse = _solve(list(exponents)[:-1])
        scale = max(float(np.max(np.abs(values[..., :k]))), 1e-300)
        if np.max(np.abs(est - coarse)) > check_tol * scale:
            raise ExtrapolationUnstable(
                "successive extrapolants disagree by "
                f"{np.max(np.abs(est - coarse)) / scale:.3e} (relative)")
    return est


def richardson_table(values, ratio: float, power: float):
    """Richardson tableau for samples at step sizes ``h, h/ratio, h/ratio**2, ...``.

    Assumes an error expansion in powers ``power, 2*power, ...``. Returns the
    list of diagonal entries (best estimate last).
    """
    vals = [float(v) for v in values]
    if len(vals) < 2:
        raise ValueError("richardson_table needs at least two values")
    diag = [vals[-1]]
    col = vals
    for j in range(1, len(vals)):
        f = ratio ** (power * j)
        col = [(f * col[i + 1] - col[i]) / (f - 1.0) for i in range(len(col) - 1)]
        diag.append(col[-1])
    return diag
