"""Per-frequency profiles of the extension and the constants derived from them.

A profile ``phi`` on ``[0, y_max]`` carries the whole cascade
``psi_k = L_b^k phi`` for ``k = 0..m+1`` (``psi_{m+1} = 0``), where
``L_b g = g'' + (b/t) g' - g`` is the Fourier-side image of the weighted
Laplacian. Two independent routes build it:

* ``closed_form``: ``phi(t) = t^gamma K_gamma(t) / (2^(gamma-1) Gamma(gamma))``,
  the decaying solution of ``phi'' + (a/t) phi' - phi = 0`` with ``phi(0) = 1``.
* ``bvp``: a weighted Galerkin discretisation of ``L_b^{m+1} phi = 0`` written
  as the chain ``L_b psi_k = psi_{k+1}``, with ``phi(0) = 1``, vanishing
  weighted fluxes ``t^b psi_k'`` at the origin for ``k < m`` and decay at
  ``y_max``. It never evaluates a Bessel function.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, sparse
from scipy.interpolate import CubicHermiteSpline
from scipy.sparse.linalg import splu
from scipy.special import gammaln, kve

from .core import FractionalOrder
from .errors import (BesselEvalFailure, NonDecaying, QuadratureDivergence,
                     SingularSystem)
from .numerics import (extrapolate_to_zero, graded_grid, weighted_element_blocks,
                       weighted_element_matrices, weighted_trapezoid_weights)

__all__ = [
    "Profile",
    "BoundaryDerivativeRow",
    "apply_lb",
    "solve_profile_closed_form",
    "solve_profile_bvp",
    "profile_energy_J",
    "neumann_constant",
    "boundary_derivative_table",
    "cascade_residual",
    "cascade_residual_profile",
    "write_profile_csv",
]

DEFAULT_Y_MAX = 30.0
DEFAULT_NODES = 2048
GRADING = 2.0


@dataclass(frozen=True, eq=False)
class Profile:
    """A profile and its cascade sampled on a graded grid.

    ``levels[k]``, ``dlevels[k]`` and ``d2levels[k]`` hold ``psi_k``,
    ``psi_k'`` and ``psi_k''`` for ``k = 0..m+1``. Values at ``t = 0`` are
    one-sided limits and may be infinite for the top level when ``b != 0``.
    ``evaluate(t, level, deriv)`` samples the same functions off the grid.
    """

    order: FractionalOrder
    y: np.ndarray
    levels: np.ndarray
    dlevels: np.ndarray
    d2levels: np.ndarray
    route: str
    evaluator: Callable
    J_value: float = float("nan")
    neumann_c: float = float("nan")

    @property
    def phi(self) -> np.ndarray:
        return self.levels[0]

    @property
    def dphi(self) -> np.ndarray:
        return self.dlevels[0]

    @property
    def d2phi(self) -> np.ndarray:
        return self.d2levels[0]

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    def evaluate(self, t, level: int = 0, deriv: int = 0) -> np.ndarray:
        return self.evaluator(np.asarray(t, dtype=float), level, deriv)


@dataclass(frozen=True)
class BoundaryDerivativeRow:
    order: int
    measured: float
    product_formula: float
    frobenius: float
    discrepancy: bool


def apply_lb(y, f, df, d2f, b: float) -> np.ndarray:
    """``f'' + (b/y) f' - f``, using ``b f''(0)`` for the middle term at ``y = 0``."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(np.asarray(f, dtype=float))
    pos = y > 0
    out[..., pos] = d2f[..., pos] + b / y[pos] * df[..., pos] - f[..., pos]
    z = ~pos
    out[..., z] = (1.0 + b) * d2f[..., z] - f[..., z]
    return out


# closed form -----------------------------------------------------------------

def _tpk(p: float, q: float, t: np.ndarray) -> np.ndarray:
    """``t^p K_q(t)`` for ``t > 0`` evaluated in log space."""
    q = abs(q)
    with np.errstate(over="ignore", divide="ignore"):
        logk = np.log(kve(q, t)) - t
    bad = ~np.isfinite(logk)
    if np.any(bad):
        if q == 0:
            raise BesselEvalFailure("K_0 evaluation failed")
        # small-argument asymptote, used only where kve overflows
        logk[bad] = gammaln(q) + (q - 1.0) * math.log(2.0) - q * np.log(t[bad])
    with np.errstate(over="ignore"):
        out = np.exp(p * np.log(t) + logk)
    return out


class _BesselChain:
    """Closed-form cascade ``psi_k = s_k t^mu K_mu(t) / norm`` with ``mu = gamma - k``."""

    def __init__(self, order: FractionalOrder):
        self.order = order
        g, m = order.gamma, order.m
        self.log_norm = (g - 1.0) * math.log(2.0) + gammaln(g)
        self.scale = [(-2.0) ** k * math.perm(m, k) for k in range(m + 2)]

    def _limit(self, mu: float, deriv: int) -> float:
        # t -> 0 limits of d^j/dt^j [t^mu K_mu(t)] from its power series
        a0 = 2.0 ** (mu - 1.0) * math.gamma(mu)
        if deriv == 0:
            return a0
        B = -math.pi * 2.0 ** (-mu) / (2.0 * math.sin(mu * math.pi) * math.gamma(1.0 + mu))
        if deriv == 1:
            if mu > 0.5:
                return 0.0
            if mu == 0.5:
                return B
            return math.copysign(math.inf, B)
        a1 = a0 / (4.0 * (1.0 - mu))
        if mu > 1.0 or mu == 0.5:
            return 2.0 * a1
        return math.copysign(math.inf, 2.0 * mu * (2.0 * mu - 1.0) * B)

    def __call__(self, t: np.ndarray, level: int = 0, deriv: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        s = self.scale[level] if level <= self.order.m else 0.0
        if s == 0.0:
            return out
        mu = self.order.gamma - level
        pos = t > 0
        tp = t[pos]
        if deriv == 0:
            vals = _tpk(mu, mu, tp)
        elif deriv == 1:
            vals = -_tpk(mu, mu - 1.0, tp)
        elif deriv == 2:
            vals = -(_tpk(mu - 1.0, mu - 1.0, tp) - _tpk(mu, mu - 2.0, tp))
        else:
            raise ValueError("deriv must be 0, 1 or 2")
        if not np.all(np.isfinite(vals)):
            raise BesselEvalFailure(f"non-finite Bessel values for mu={mu}")
        factor = s * math.exp(-self.log_norm)
        out[pos] = factor * vals
        # the normalisation is the t -> 0 value, so phi(0) = 1 holds exactly
        out[~pos] = 1.0 if (level, deriv) == (0, 0) else factor * self._limit(mu, deriv)
        return out


def _sample(order: FractionalOrder, y: np.ndarray, evaluator) -> tuple[np.ndarray, ...]:
    L = order.m + 2
    levels = np.array([evaluator(y, k, 0) for k in range(L)])
    dlevels = np.array([evaluator(y, k, 1) for k in range(L)])
    d2levels = np.array([evaluator(y, k, 2) for k in range(L)])
    return levels, dlevels, d2levels


def _finish(p: Profile) -> Profile:
    p = replace(p, J_value=profile_energy_J(p))
    return replace(p, neumann_c=neumann_constant(p))


def solve_profile_closed_form(order: FractionalOrder, y_max: float = DEFAULT_Y_MAX,
                              n_nodes: int = DEFAULT_NODES) -> Profile:
    """Profile from the Macdonald-function representation ``t^gamma K_gamma(t)``."""
    y = graded_grid(y_max, n_nodes, GRADING)
    chain = _BesselChain(order)
    levels, dlevels, d2levels = _sample(order, y, chain)
    return _finish(Profile(order, y, levels, dlevels, d2levels, "closed_form", chain))


# boundary value route --------------------------------------------------------

def _basis_exponent(order: FractionalOrder, level: int) -> float:
    # the top level carries a t^(1-b) term, captured exactly by this basis
    return 1.0 - order.b if level == order.m else 1.0


def _element_integrals(t, b, e):
    """Per-element ``∫ t^b N_a`` for the two local basis functions."""
    blk = weighted_element_blocks(t, b, e, 1.0)
    return blk[0][0] + blk[0][1], blk[1][0] + blk[1][1]


class _SplineChain:
    """Cubic Hermite interpolation of a solved cascade.

    The top level is interpolated in ``s = t^(1-b)``, where it is smooth.
    """

    def __init__(self, order, y, levels, fluxes):
        self.order = order
        self.y_max = float(y[-1])
        b = order.b
        self.splines = []
        for k in range(order.m + 1):
            e = _basis_exponent(order, k)
            s = y ** e
            if e == 1.0:
                with np.errstate(divide="ignore", invalid="ignore"):
                    d = np.where(y > 0, fluxes[k] / np.where(y > 0, y, 1.0) ** b, 0.0)
            else:
                d = fluxes[k] / e
            self.splines.append((e, CubicHermiteSpline(s, levels[k], d)))

    def __call__(self, t, level=0, deriv=0):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        if level > self.order.m:
            return out
        inside = t <= self.y_max
        ti = t[inside]
        e, spl = self.splines[level]
        s = ti ** e
        b = self.order.b
        val = spl(s)
        if deriv == 0:
            out[inside] = val
            return out
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = e * ti ** (e - 1.0)
            d1 = spl(s, 1) * ds
        if e != 1.0:
            d1 = np.where(ti > 0, d1, self._top_limit(spl, 1))
        if deriv == 1:
            out[inside] = d1
            return out
        nxt = self(ti, level + 1, 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            d2 = val + nxt - b / ti * d1
        zero = ti == 0
        if np.any(zero):
            if level < self.order.m or b == 0:
                d2[zero] = (val[zero] + nxt[zero]) / (1.0 + b)
            else:
                d2[zero] = self._top_limit(spl, 2)
        out[inside] = d2
        return out

    def _top_limit(self, spl, deriv):
        b = self.order.b
        flux0 = float(spl(0.0, 1)) * (1.0 - b)
        if b == 0:
            return flux0 if deriv == 1 else float(spl(0.0))
        if deriv == 1:
            return 0.0 if b < 0 else math.copysign(math.inf, flux0)
        return math.copysign(math.inf, -b * flux0)


def solve_profile_bvp(order: FractionalOrder, y_max: float = DEFAULT_Y_MAX,
                      n_nodes: int = DEFAULT_NODES) -> Profile:
    """Solve ``L_b^{m+1} phi = 0`` on ``[0, y_max]`` as a chain of weighted problems.

    Each level satisfies ``(t^b psi_k')' - t^b psi_k = t^b psi_{k+1}`` in weak
    form. At the origin ``phi(0) = 1`` and ``t^b psi_k' -> 0`` for ``k < m``;
    at ``y_max`` a Robin condition matches the decaying asymptote
    ``t^(m - k - b/2) e^{-t}`` of each level.
    """
    if y_max < 20:
        raise ValueError("y_max must be at least 20")
    if n_nodes < 256:
        raise ValueError("n_nodes must be at least 256")
    m, b = order.m, order.b
    y = graded_grid(y_max, n_nodes, GRADING)
    N = n_nodes + 1
    L = m + 1
    ex = [_basis_exponent(order, k) for k in range(L)]
    blocks = [[None] * L for _ in range(L)]
    op = []
    for k in range(L):
        A = (weighted_element_matrices(y, b, ex[k], ex[k], stiffness=True)
             + weighted_element_matrices(y, b, ex[k], ex[k])).tolil()
        op.append(A.tocsr())
        decay_rate = -1.0 + (m - k - 0.5 * b) / y_max
        A[n_nodes, n_nodes] -= y_max ** b * decay_rate
        blocks[k][k] = A.tocsr()
        if k + 1 < L:
            blocks[k][k + 1] = weighted_element_matrices(y, b, ex[k], ex[k + 1])
    S = sparse.bmat(blocks, format="lil")
    rhs = np.zeros(L * N)
    # the top level's flux at the origin is free: its origin row carries phi(0) = 1
    r = m * N
    S.rows[r], S.data[r] = [0], [1.0]
    rhs[r] = 1.0
    try:
        lu = splu(S.tocsc())
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc
    pivots = np.abs(lu.U.diagonal())
    if pivots.min() <= 1e-14 * pivots.max():
        raise SingularSystem("profile system is numerically rank deficient")
    sol = lu.solve(rhs)
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("profile solve produced non-finite values")
    sol = sol.reshape(L, N)
    # the constraint row holds to round-off; store the boundary value exactly
    sol[0, 0] = 1.0
    if abs(sol[0, -1]) > 1e-6 * np.max(np.abs(sol[0])):
        raise NonDecaying(f"profile tail {sol[0, -1]:.3e} exceeds tolerance")

    levels = np.zeros((m + 2, N))
    levels[:L] = sol
    fluxes = np.zeros((m + 2, N))
    for k in range(L):
        left, right = _element_integrals(y, b, ex[k])
        nxt_left, nxt_right = _element_integrals(y, b, ex[k + 1]) if k + 1 < L else (left * 0, right * 0)
        src = (left * levels[k, :-1] + right * levels[k, 1:]
               + nxt_left * levels[k + 1, :-1] + nxt_right * levels[k + 1, 1:])
        f0 = -(op[k] @ levels[k])[0] if k == m else 0.0
        fluxes[k] = f0 + np.concatenate([[0.0], np.cumsum(src)])
    chain = _SplineChain(order, y, levels, fluxes)
    lv, dl, d2 = _sample(order, y, chain)
    return _finish(Profile(order, y, lv, dl, d2, "bvp", chain))


# derived constants -----------------------------------------------------------

def _energy_level(order: FractionalOrder) -> int:
    return (order.m + 1) // 2


def profile_energy_J(p: Profile) -> float:
    """Energy constant ``J(phi)`` of the profile.

    ``m`` odd: ``∫ t^b (L_b^{(m+1)/2} phi)^2``; ``m`` even:
    ``∫ t^b (W^2 + W'^2)`` with ``W = L_b^{floor((m+1)/2)} phi``. Closed-form
    profiles use adaptive quadrature on ``[0, y_max]``; others use the exact
    weighted inner products of their Galerkin interpolants.
    """
    order = p.order
    b, j = order.b, _energy_level(order)
    odd = order.m % 2 == 1
    Y = p.y_max
    if p.route == "closed_form":
        def g(t):
            tt = np.array([t])
            v = p.evaluate(tt, j, 0)[0] ** 2
            if not odd:
                v += p.evaluate(tt, j, 1)[0] ** 2
            return v

        # QAGS never samples the endpoints, so the integrable t -> 0
        # singularity of the top-level derivative is handled by extrapolation
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            head, _ = integrate.quad(lambda t: t ** b * g(t), 0.0, 1.0,
                                     epsabs=0.0, epsrel=1e-13, limit=400)
            body, _ = integrate.quad(lambda t: t ** b * g(t), 1.0, Y,
                                     epsabs=0.0, epsrel=1e-13, limit=400)
        total = head + body
        tail = Y ** b * g(Y) * Y
    else:
        e = _basis_exponent(order, j)
        w = p.levels[j]
        M = weighted_element_matrices(p.y, b, e, e)
        total = float(w @ (M @ w))
        if not odd:
            K = weighted_element_matrices(p.y, b, e, e, stiffness=True)
            total += float(w @ (K @ w))
        tail = Y ** b * (w[-1] ** 2 + p.dlevels[j, -1] ** 2) * Y
    if not np.isfinite(total) or tail > 1e-10 * max(total, 1e-300):
        raise QuadratureDivergence(f"energy integrand does not decay (tail {tail:.3e})")
    return float(total)


def _head_exponents(b: float) -> tuple[float, float]:
    # expansion of t^b psi_m'(t) near 0 mixes t^(1+b) and t^2
    return (1.0 + b, 2.0) if abs(1.0 - b) > 0.05 else (1.0 + b, 3.0 + b)


def neumann_constant(p: Profile, check_tol: float = 1e-4) -> float:
    """``lim_{t->0} t^b d/dt[L_b^m phi](t)`` by extrapolation over the grid head."""
    m, b = p.order.m, p.order.b
    t = p.y[1:4]
    flux = t ** b * p.dlevels[m, 1:4]
    return float(extrapolate_to_zero(t, flux, _head_exponents(b), check_tol=check_tol))


def _frobenius_coefficients(gamma: float, kmax: int) -> list[float]:
    c = [1.0]
    for k in range(1, kmax + 1):
        c.append(c[-1] / (4.0 * k * (k - gamma)))
    return c


def _measure_even_derivatives(p: Profile, kmax: int, t_fit: float = 0.5) -> list[float]:
    g = p.order.gamma
    degree = max(8, 2 * kmax + 4)
    exps = [2.0 * j for j in range(degree // 2 + 1)]
    exps += [2.0 * g + 2.0 * j for j in range(degree) if 2.0 * g + 2.0 * j <= degree]
    sel = p.y <= t_fit
    s = p.y[sel] / t_fit
    A = np.column_stack([s ** e for e in exps])
    coef, *_ = np.linalg.lstsq(A, p.phi[sel], rcond=None)
    return [math.factorial(2 * k) * coef[k] / t_fit ** (2 * k) for k in range(kmax + 1)]


def boundary_derivative_table(p: Profile, tol: float = 1e-8) -> list[BoundaryDerivativeRow]:
    """Audit of even boundary derivatives ``phi^{(2k)}(0)`` for ``2k <= m``.

    Columns: the value measured from the profile, the even-derivative product
    prescribed for the boundary data (translated per frequency with the
    ``(-1)^k`` coming from ``Δ_x^k``), and the value forced by the power series
    of ``phi'' + (a/t) phi' - phi = 0``. Disagreements are flagged, not raised.
    """
    g = p.order.gamma
    kmax = p.order.m // 2
    measured = _measure_even_derivatives(p, kmax)
    frob = _frobenius_coefficients(g, kmax)
    rows = []
    for k in range(kmax + 1):
        prod = (-1.0) ** k * math.prod(1.0 / (2.0 * g - 4.0 * (j - 1)) for j in range(1, k + 1))
        fr = math.factorial(2 * k) * frob[k]
        rows.append(BoundaryDerivativeRow(
            order=2 * k, measured=float(measured[k]), product_formula=prod, frobenius=fr,
            discrepancy=abs(prod - fr) > tol * max(1.0, abs(fr))))
    return rows


def cascade_residual(y, psi, dpsi, d2psi, weight: float) -> float:
    """Discrete L2 norm of ``psi'' + (weight/y) psi' - psi`` over interior nodes."""
    y = np.asarray(y, dtype=float)
    inner = slice(1, y.size - 1)
    r = d2psi[inner] + weight / y[inner] * dpsi[inner] - psi[inner]
    w = weighted_trapezoid_weights(y, 0.0)[inner]
    return float(np.sqrt(np.sum(w * r ** 2)))


def cascade_residual_profile(p: Profile, k: int) -> float:
    """Residual of the ``k``-th cascade member in ``ψ'' + ((a+2k)/t)ψ' - ψ = 0``."""
    if not 0 <= k <= p.order.m:
        raise ValueError(f"k must lie in [0, {p.order.m}]")
    return cascade_residual(p.y, p.levels[k], p.dlevels[k], p.d2levels[k], p.order.a + 2 * k)


def write_profile_csv(p: Profile, path) -> Path:
    """Write ``y,phi,dphi,d2phi,Lb_phi,Lb2_phi,...`` (17 significant digits)."""
    path = Path(path)
    m = p.order.m
    header = ["y", "phi", "dphi", "d2phi"] + [
        "Lb_phi" if k == 1 else f"Lb{k}_phi" for k in range(1, m + 1)]
    cols = [p.y, p.phi, p.dphi, p.d2phi] + [p.levels[k] for k in range(1, m + 1)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([f"{v:.17g}" for v in row])
    return path
