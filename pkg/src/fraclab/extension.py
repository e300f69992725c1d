"""Extensions of periodic traces to the half-space and the identities they satisfy.

Fields are stored as arrays ``U[x_1, ..., x_n, j]`` with the ``y`` levels on
the last axis. A spectrally assembled field caches the cascade
``U_k = Δ_b^k U`` (``k = 0..m+1``) and ``∂_y U_k``, both computed exactly per
frequency from the profile: ``Û_k(ξ, y) = f̂(ξ) |ξ|^{2k} psi_k(|ξ| y)``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy import integrate
from scipy.interpolate import CubicSpline

from .core import (PLANCHEREL_CONSTANT, BoundaryFunction, FractionalOrder, XGrid,
                   hgamma_seminorm_sq, significant_modes)
from .errors import (DivergentEnergy, GridMismatch, InsufficientGrid, NoConvergence,
                     WrongOrder)
from .numerics import (derivative_matrix, extrapolate_to_zero,
                       one_sided_derivative_at_zero, weighted_trapezoid_weights)
from .profile import Profile

__all__ = [
    "HalfSpaceField",
    "EnergyReport",
    "RegularizedEnergyReport",
    "worker_count",
    "extend",
    "apply_delta_b",
    "extension_energy",
    "neumann_trace",
    "regularized_energy_limit",
    "odd_trace_residual",
    "equation1_residual",
    "trace_inequality_check",
    "write_field_csv",
]

NEUMANN_CHECK_TOL = 1e-3
# smallest y-extent of a finite-difference stencil; the graded mesh head is
# far finer than this and would otherwise be dominated by round-off
FD_MIN_SPAN = 2e-4
DEFAULT_EPSILONS = 0.1 * 0.5 ** np.arange(5)


def worker_count() -> int:
    """Thread cap from ``FRACLAB_THREADS`` (default 1)."""
    raw = os.environ.get("FRACLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"FRACLAB_THREADS must be an integer >= 1, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"FRACLAB_THREADS must be an integer >= 1, got {n}")
    return n


@dataclass(frozen=True, eq=False)
class HalfSpaceField:
    """Samples of ``U(x, y)`` on an x-grid times a y-grid.

    ``iterates`` and ``dy_iterates`` are present for spectrally assembled
    fields and hold ``U_k`` and ``∂_y U_k`` for ``k = 0..m+1``.
    """

    x_grid: XGrid
    y: np.ndarray
    values: np.ndarray
    order: FractionalOrder
    iterates: tuple | None = None
    dy_iterates: tuple | None = None
    profile: Profile | None = None
    source: BoundaryFunction | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.x_grid.shape + (y.size,):
            raise GridMismatch(f"values shape {v.shape} does not match grids "
                               f"{self.x_grid.shape + (y.size,)}")
        if y[0] != 0.0 or np.any(np.diff(y) <= 0):
            raise GridMismatch("y grid must start at 0 and increase strictly")
        if not np.all(np.isfinite(v)):
            raise GridMismatch("field values must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "values", v)

    @property
    def x_axes(self) -> tuple[int, ...]:
        return tuple(range(self.x_grid.n_dim))

    def iterate(self, k: int) -> np.ndarray:
        """``Δ_b^k U``, from the cache or by repeated finite differences."""
        if self.iterates is not None:
            return self.iterates[k]
        w = self
        for _ in range(k):
            w = apply_delta_b(w)
        return w.values

    def with_values(self, values) -> "HalfSpaceField":
        """Same grids and order, new samples, no cached iterates."""
        return HalfSpaceField(self.x_grid, self.y, values, self.order, source=self.source)


@dataclass(frozen=True)
class EnergyReport:
    gamma: float
    m: int
    b: float
    lhs: float
    rhs: float
    ratio: float
    J_expected: float
    nx: int
    ny: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass(frozen=True)
class RegularizedEnergyReport:
    epsilons: np.ndarray
    finite_part_estimates: np.ndarray
    extrapolated_limit: float
    bulk_energy_half: float

    @property
    def relative_discrepancy(self) -> float:
        return abs(self.extrapolated_limit - self.bulk_energy_half) / max(
            abs(self.bulk_energy_half), 1e-300)


# spectral helpers ------------------------------------------------------------

def _rfft(u: np.ndarray, grid: XGrid) -> np.ndarray:
    axes = tuple(range(grid.n_dim))
    return sfft.rfftn(u, axes=axes, norm="forward", workers=worker_count())


def _irfft(c: np.ndarray, grid: XGrid) -> np.ndarray:
    axes = tuple(range(grid.n_dim))
    return sfft.irfftn(c, s=grid.shape, axes=axes, norm="forward", workers=worker_count())


def _x_gradient(u: np.ndarray, grid: XGrid) -> list[np.ndarray]:
    c = _rfft(u, grid)
    out = []
    for k in grid.wavenumbers(real=True):
        out.append(_irfft(1j * k[..., None] * c, grid))
    return out


def _x_laplacian(u: np.ndarray, grid: XGrid) -> np.ndarray:
    c = _rfft(u, grid)
    mag2 = grid.frequency_magnitudes(real=True) ** 2
    return _irfft(-mag2[..., None] * c, grid)


def _x_mean(u: np.ndarray, n_dim: int) -> np.ndarray:
    return np.mean(u, axis=tuple(range(n_dim)))


# assembly --------------------------------------------------------------------

def extend(f: BoundaryFunction, p: Profile, y=None) -> HalfSpaceField:
    """Assemble ``Û(ξ, y) = f̂(ξ) phi(|ξ| y)`` and its cascade on the profile's y-grid.

    Frequencies whose coefficients sit at the round-off floor are dropped.
    """
    y = p.y if y is None else np.asarray(y, dtype=float)
    grid = f.grid
    m = p.order.m
    coef = _rfft(f.values, grid)
    mags = grid.frequency_magnitudes(real=True)
    active = significant_modes(coef) & (mags > 0)
    xi = mags[active]
    arg = np.multiply.outer(xi, y)
    iterates, dy_iterates = [], []
    for k in range(m + 2):
        for deriv, store in ((0, iterates), (1, dy_iterates)):
            spec = np.zeros(coef.shape + (y.size,), dtype=complex)
            if k == 0 and deriv == 0:
                spec[..., :] = np.where(mags == 0, coef, 0.0)[..., None]
            if xi.size and k <= m:
                vals = p.evaluate(arg, k, deriv)
                if deriv == 1 and y[0] == 0.0:
                    vals[:, 0] = np.where(np.isfinite(vals[:, 0]), vals[:, 0], np.nan)
                scale = coef[active] * xi ** (2 * k + deriv)
                spec[active] = scale[:, None] * vals
            store.append(_irfft(spec, grid))
    return HalfSpaceField(grid, y, iterates[0], p.order, tuple(iterates),
                          tuple(dy_iterates), p, f)


def apply_delta_b(u: HalfSpaceField) -> HalfSpaceField:
    """``Δ_b U = Δ_x U + U_yy + (b/y) U_y``: spectral in x, 5-point stencils in y.

    The y-stencils are one-sided near ``y = 0`` (top iterates need not be even
    in ``y``); at ``y = 0`` the middle term is replaced by its limit
    ``b U_yy``, which presumes a vanishing odd trace.
    """
    y = u.y
    if y.size < 4:
        raise InsufficientGrid(f"need at least 4 y levels, got {y.size}")
    b = u.order.b
    D1 = derivative_matrix(y, 1, even_reflection=False, min_span=FD_MIN_SPAN)
    D2 = derivative_matrix(y, 2, even_reflection=False, min_span=FD_MIN_SPAN)
    U = u.values
    uy = U @ D1.T
    uyy = U @ D2.T
    out = _x_laplacian(U, u.x_grid) + uyy
    out[..., 1:] += b / y[1:] * uy[..., 1:]
    out[..., 0] += b * uyy[..., 0]
    return u.with_values(out)


# energies --------------------------------------------------------------------

def _energy_weights(u: HalfSpaceField, level: int) -> np.ndarray:
    e = 1.0 - u.order.b if level == u.order.m else 1.0
    return weighted_trapezoid_weights(u.y, u.order.b, e)


def _energy_density(u: HalfSpaceField) -> tuple[np.ndarray, int]:
    """x-mean of the extension energy integrand at each y level."""
    order = u.order
    j = (order.m + 1) // 2
    W = u.iterate(j)
    if order.m % 2 == 1:
        return _x_mean(W ** 2, u.x_grid.n_dim), j
    wy = W @ derivative_matrix(u.y, 1, even_reflection=False, min_span=FD_MIN_SPAN).T
    dens = _x_mean(wy ** 2, u.x_grid.n_dim)
    for g in _x_gradient(W, u.x_grid):
        dens = dens + _x_mean(g ** 2, u.x_grid.n_dim)
    return dens, j


def _extension_energy_value(u: HalfSpaceField) -> float:
    dens, j = _energy_density(u)
    w = _energy_weights(u, j)
    parts = w * dens
    total = float(np.sum(parts))
    tail = float(np.sum(parts[u.y >= 0.95 * u.y[-1]]))
    if tail > 1e-8 * max(total, 1e-300) and total > 0:
        raise DivergentEnergy(f"tail holds {tail / total:.2e} of the extension energy")
    return total


def extension_energy(u: HalfSpaceField) -> EnergyReport:
    """Compare the extension energy with ``Σ |ξ|^{2γ} |f̂|²``.

    ``m`` odd: ``∫ y^b mean_x (Δ_b^{(m+1)/2} U)^2``; ``m`` even:
    ``∫ y^b mean_x |∇ Δ_b^{m/2} U|^2``. Quadrature in y uses the exact
    ``y^b``-weighted hat weights of the graded mesh.
    """
    if u.source is None:
        raise GridMismatch("energy report needs the source trace")
    lhs = hgamma_seminorm_sq(u.source, u.order)
    rhs = _extension_energy_value(u)
    ratio = rhs / lhs if lhs > 0 else float("nan")
    J = u.profile.J_value if u.profile is not None else float("nan")
    return EnergyReport(gamma=u.order.gamma, m=u.order.m, b=u.order.b, lhs=float(lhs),
                        rhs=float(rhs), ratio=float(ratio),
                        J_expected=float(PLANCHEREL_CONSTANT * J),
                        nx=u.x_grid.points_per_axis, ny=int(u.y.size - 1))


# boundary traces -------------------------------------------------------------

def _flux_exponents(b: float) -> tuple[float, float]:
    return (1.0 + b, 2.0) if abs(1.0 - b) > 0.05 else (1.0 + b, 3.0 + b)


def neumann_trace(u: HalfSpaceField, check_tol: float = NEUMANN_CHECK_TOL) -> BoundaryFunction:
    """Weighted normal derivative ``lim_{y->0} y^b ∂_y U_m`` of the top iterate.

    The extrapolation is linear in the data, so applying it to physical
    samples is the same as applying it frequency by frequency.
    """
    if u.dy_iterates is None:
        raise GridMismatch("neumann_trace needs a spectrally assembled field")
    m, b = u.order.m, u.order.b
    y = u.y[1:4]
    flux = u.dy_iterates[m][..., 1:4] * y ** b
    data = extrapolate_to_zero(y, flux, _flux_exponents(b), check_tol=check_tol)
    return BoundaryFunction(u.x_grid, data)


def regularized_energy_limit(u: HalfSpaceField, epsilons=None) -> RegularizedEnergyReport:
    """Finite part ``(1/ε) mean|∇_x f|² - ∫_{y>ε} mean|∇U|²/y²`` as ``ε -> 0``.

    Only the order ``3/2`` field is supported. The estimates approach the
    limit as ``O(ε²)`` (the ``y²`` coefficient of ``mean|∇U|²`` vanishes), so
    the three smallest ``ε`` are extrapolated with powers ``ε²`` and ``ε³``.
    """
    if u.order.gamma != 1.5:
        raise WrongOrder(f"regularized energy is defined for gamma = 1.5, got {u.order.gamma}")
    if u.dy_iterates is None:
        raise GridMismatch("regularized energy needs a spectrally assembled field")
    eps = np.asarray(DEFAULT_EPSILONS if epsilons is None else epsilons, dtype=float)
    if eps.size < 3 or np.any(np.diff(eps) >= 0) or eps[-1] <= 0:
        raise ValueError("epsilons must be at least 3 positive, strictly decreasing values")
    n = u.x_grid.n_dim
    U = u.values
    G = _x_mean(u.dy_iterates[0] ** 2, n)
    for g in _x_gradient(U, u.x_grid):
        G = G + _x_mean(g ** 2, n)
    G0 = float(G[0])
    Y = float(u.y[-1])
    spline = CubicSpline(u.y, G)
    knots = u.y[(u.y > eps[-1]) & (u.y < 1.0)][::16]
    est = []
    for e in eps:
        pts = knots[knots > e]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            inner, _ = integrate.quad(lambda t: spline(t) / t ** 2, e, 1.0, points=pts[:50],
                                      limit=500, epsabs=0.0, epsrel=1e-12)
            outer, _ = integrate.quad(lambda t: spline(t) / t ** 2, 1.0, Y, limit=500,
                                      epsabs=0.0, epsrel=1e-12)
        est.append(G0 / e - inner - outer)
    est = np.array(est)
    if not np.all(np.isfinite(est)):
        raise NoConvergence("non-finite finite-part estimates")
    tail = eps[::-1][:3]
    vals = est[::-1][:3]
    limit = float(extrapolate_to_zero(tail, vals, (2.0, 3.0)))
    coarse = float(extrapolate_to_zero(tail, vals, (2.0,)))
    scale = max(abs(limit), abs(G0) * 1e-12, 1e-300)
    if abs(limit - coarse) > 1e-2 * scale:
        raise NoConvergence(f"extrapolants disagree: {coarse} vs {limit}")
    w = weighted_trapezoid_weights(u.y, 0.0)
    bulk = 0.5 * float(np.sum(w * _x_mean(u.iterate(1) ** 2, n)))
    return RegularizedEnergyReport(eps, est, limit, bulk)


def odd_trace_residual(u: HalfSpaceField, k: int) -> float:
    """``max_x |∂_y U_k(x, 0)|`` from a one-sided 5-point stencil, ``0 <= k < m``.

    The ``k = m`` trace carries the Neumann data and is not expected to vanish,
    so it is rejected.
    """
    m = u.order.m
    if not 0 <= k < m:
        raise ValueError(f"odd traces vanish only for 0 <= k < m (m = {m}), got k = {k}")
    d = one_sided_derivative_at_zero(u.y, u.iterate(k))
    return float(np.max(np.abs(d)))


def _l2_interior(u: HalfSpaceField, r: np.ndarray) -> float:
    w = weighted_trapezoid_weights(u.y, 0.0)
    inner = slice(1, u.y.size - 1)
    dens = _x_mean(r[..., inner] ** 2, u.x_grid.n_dim)
    return float(np.sqrt(np.sum(w[inner] * dens)))


def equation1_residual(u: HalfSpaceField) -> float:
    """L2 norm over interior nodes of ``ΔU + (a/y) U_y`` (spectral x, 5-point y)."""
    y = u.y
    if y.size < 4:
        raise InsufficientGrid(f"need at least 4 y levels, got {y.size}")
    U = u.values
    uy = U @ derivative_matrix(y, 1, even_reflection=False, min_span=FD_MIN_SPAN).T
    uyy = U @ derivative_matrix(y, 2, even_reflection=False, min_span=FD_MIN_SPAN).T
    r = _x_laplacian(U, u.x_grid) + uyy
    r[..., 1:] += u.order.a / y[1:] * uy[..., 1:]
    return _l2_interior(u, r)


def trace_inequality_check(u: HalfSpaceField, rtol: float = 1e-3) -> tuple[float, float, bool]:
    """``|f|²_{H^γ}`` against the extension energy divided by ``J``.

    Equality holds for the profile extension, which minimizes the energy;
    any other field with the same trace has a larger right-hand side.
    Returns ``(lhs, rhs, ok)`` with ``ok`` iff ``lhs <= (1 + rtol) rhs``.
    """
    if u.source is None or u.profile is None:
        raise GridMismatch("trace inequality needs the source trace and profile")
    lhs = hgamma_seminorm_sq(u.source, u.order)
    rhs = _extension_energy_value(u) / (PLANCHEREL_CONSTANT * u.profile.J_value)
    return float(lhs), float(rhs), bool(lhs <= (1.0 + rtol) * rhs + 1e-300)


def write_field_csv(u: HalfSpaceField, path, x_stride: int = 1, y_stride: int = 1) -> Path:
    """Write ``x,y,U,U_1,...`` rows for a 1-D x-grid (17 significant digits)."""
    if u.x_grid.n_dim != 1:
        raise GridMismatch("CSV snapshots are written for 1-D x-grids only")
    path = Path(path)
    levels = u.iterates[:u.order.m + 1] if u.iterates is not None else (u.values,)
    header = ["x", "y", "U"] + [f"U_{k}" for k in range(1, len(levels))]
    x = u.x_grid.nodes
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(0, x.size, x_stride):
            for j in range(0, u.y.size, y_stride):
                w.writerow([f"{x[i]:.17g}", f"{u.y[j]:.17g}"]
                           + [f"{lv[i, j]:.17g}" for lv in levels])
    return path
