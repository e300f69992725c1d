"""Almgren-type frequency quantities on balls and half-balls of the ``(x, y)`` half-plane.

Only one tangential dimension is supported: points are ``X = (x, y)`` with
``y >= 0``. Integrals carry the weight ``y^b``; for half-balls centered on
``y = 0`` that weight is built into the angular Gauss-Jacobi rule, so no node
sits on the flat face.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import RectBivariateSpline
from scipy.special import roots_jacobi

from .core import BoundaryFunction, FractionalOrder, XGrid
from .errors import (InsufficientRadii, QuadratureOutOfDomain, TraceConditionViolated,
                     ZeroH)
from .extension import FD_MIN_SPAN, HalfSpaceField, _x_gradient, odd_trace_residual
from .numerics import derivative_matrix, fornberg_weights

__all__ = [
    "BallQuadrature",
    "AnalyticField",
    "GridFieldSampler",
    "FrequencyReport",
    "ball_quadrature",
    "compute_D",
    "compute_H",
    "compute_N",
    "frequency_scan",
    "monotonicity_check",
    "rellich_residual",
    "interior_exterior_check",
    "dk_boundary_identity_residual",
    "vanishing_order",
    "fractional_harmonic_trace",
]


# quadrature ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BallQuadrature:
    """Volume and surface rules for ``B_r(center)`` (or its upper half).

    ``volume_weights`` and ``surface_weights`` already include ``y^b`` (and
    the arc-length / area Jacobians). ``surface_normals`` are outward unit
    normals at ``surface_nodes``.
    """

    center: tuple[float, float]
    radius: float
    b: float
    half_ball: bool
    volume_nodes: np.ndarray
    volume_weights: np.ndarray
    surface_nodes: np.ndarray
    surface_weights: np.ndarray
    surface_normals: np.ndarray
    rule: str = "gauss"

    @property
    def offsets(self) -> np.ndarray:
        """``X - center`` at the volume nodes."""
        return self.volume_nodes - np.asarray(self.center)


def _cell_integrals(edges, weight):
    out = np.empty(edges.size - 1)
    for i in range(out.size):
        out[i] = integrate.quad(weight, edges[i], edges[i + 1], limit=200)[0]
    return out


def ball_quadrature(center, radius: float, b: float, half_ball: bool | None = None,
                    n_radial: int = 24, n_angular: int = 48, rule: str = "gauss") -> BallQuadrature:
    """Product rule in polar coordinates about ``center``.

    ``rule="gauss"``: Gauss-Jacobi in the radius (weight ``rho^{1+b}`` for
    half-balls, ``rho`` otherwise); in the angle, Gauss-Jacobi in
    ``cos(theta)`` carrying ``sin(theta)^b`` for half-balls, the periodic
    trapezoid for interior balls. ``rule="midpoint"``: cell midpoints with
    exactly integrated weights, a second-order rule used for convergence
    studies.
    """
    cx, cy = float(center[0]), float(center[1])
    if radius <= 0:
        raise ValueError("radius must be positive")
    if half_ball is None:
        half_ball = cy == 0.0
    if half_ball and cy != 0.0:
        raise QuadratureOutOfDomain("half-balls must be centered on y = 0")
    if not half_ball and cy - radius < 0.0:
        raise QuadratureOutOfDomain(f"ball of radius {radius} at y={cy} leaves the half-space")
    if rule not in ("gauss", "midpoint"):
        raise ValueError(f"unknown rule {rule!r}")
    r = float(radius)
    rad_pow = 1.0 + b if half_ball else 1.0

    if rule == "gauss":
        s, ws = roots_jacobi(n_radial, 0.0, rad_pow)
        rho = 0.5 * r * (1.0 + s)
        w_rho = ws * (0.5 * r) ** (1.0 + rad_pow)
    else:
        edges = np.linspace(0.0, r, n_radial + 1)
        rho = 0.5 * (edges[:-1] + edges[1:])
        w_rho = np.diff(edges ** (1.0 + rad_pow)) / (1.0 + rad_pow)

    if half_ball:
        if rule == "gauss":
            u, wu = roots_jacobi(n_angular, 0.5 * (b - 1.0), 0.5 * (b - 1.0))
            theta = np.arccos(u)
            w_th = wu
        else:
            edges = np.linspace(0.0, np.pi, n_angular + 1)
            theta = 0.5 * (edges[:-1] + edges[1:])
            w_th = _cell_integrals(edges, lambda t: np.sin(t) ** b)
    else:
        theta = (np.arange(n_angular) + 0.5) * (2.0 * np.pi / n_angular)
        w_th = np.full(n_angular, 2.0 * np.pi / n_angular)

    ct, st = np.cos(theta), np.sin(theta)
    R, T = np.meshgrid(rho, np.arange(theta.size), indexing="ij")
    vx = cx + R * ct[T]
    vy = cy + R * st[T]
    vw = np.outer(w_rho, w_th)
    sx = cx + r * ct
    sy = cy + r * st
    if half_ball:
        sw = r ** (1.0 + b) * w_th
    else:
        vw = vw * vy ** b
        sw = r * w_th * sy ** b
    return BallQuadrature(
        center=(cx, cy), radius=r, b=float(b), half_ball=bool(half_ball),
        volume_nodes=np.column_stack([vx.ravel(), vy.ravel()]),
        volume_weights=vw.ravel(),
        surface_nodes=np.column_stack([sx, sy]),
        surface_weights=sw,
        surface_normals=np.column_stack([ct, st]),
        rule=rule,
    )


# samplers --------------------------------------------------------------------

class AnalyticField:
    """Cascade ``U_0..U_m`` given by callables; ``U_{m+1}`` is taken as zero.

    ``levels[k] = (value, gradient)`` with ``value(x, y) -> array`` and
    ``gradient(x, y) -> (d/dx, d/dy)``.
    """

    y_max = math.inf

    def __init__(self, b: float, levels: Sequence[tuple[Callable, Callable]]):
        self.b = float(b)
        self.levels = list(levels)
        self.m = len(self.levels) - 1

    def value(self, k: int, pts: np.ndarray) -> np.ndarray:
        if k > self.m:
            return np.zeros(len(pts))
        return np.broadcast_to(np.asarray(self.levels[k][0](pts[:, 0], pts[:, 1]), float),
                               (len(pts),)).copy()

    def gradient(self, k: int, pts: np.ndarray) -> np.ndarray:
        if k > self.m:
            return np.zeros((len(pts), 2))
        gx, gy = self.levels[k][1](pts[:, 0], pts[:, 1])
        n = len(pts)
        return np.column_stack([np.broadcast_to(np.asarray(gx, float), (n,)),
                                np.broadcast_to(np.asarray(gy, float), (n,))])


def _periodic_x_derivative(u: np.ndarray, h: float) -> np.ndarray:
    # 5-point centered stencil with periodic wrap (local, unlike the spectral one)
    w = fornberg_weights(0.0, np.arange(-2, 3) * h, 1)[1]
    return sum(w[i] * np.roll(u, 2 - i, axis=0) for i in range(5))


class GridFieldSampler:
    """Bicubic-spline sampling of a 1-D-in-x :class:`HalfSpaceField` and its cascade.

    Spectrally assembled fields use their cached cascade, spectral
    x-derivatives and per-frequency y-derivatives. Other fields (which need
    not be periodic) use 5-point stencils in both directions, including for
    the iterates ``Δ_b^k U``.
    """

    def __init__(self, u: HalfSpaceField):
        if u.x_grid.n_dim != 1:
            raise QuadratureOutOfDomain("ball quadrature supports one tangential dimension")
        self.u = u
        self.b = u.order.b
        self.m = u.order.m
        self.y_max = float(u.y[-1])
        self.period = u.x_grid.period
        self._levels = {}
        self._splines = {}
        self._window = None

    def _level_data(self, k):
        if k not in self._levels:
            u = self.u
            if u.iterates is not None:
                U = u.iterates[k]
                ux = _x_gradient(U, u.x_grid)[0]
                uy = np.array(u.dy_iterates[k])
                if not np.all(np.isfinite(uy[:, 0])):
                    # singular weighted-normal derivative on the face; splines need
                    # finite data, and quadrature nodes never sit on y = 0
                    uy[:, 0] = uy[:, 1]
            else:
                U = u.values
                for _ in range(k):
                    U = self._local_delta_b(U)
                ux = _periodic_x_derivative(U, u.x_grid.spacing)
                D1 = derivative_matrix(u.y, 1, even_reflection=False, min_span=FD_MIN_SPAN)
                uy = U @ D1.T
            self._levels[k] = (U, ux, uy)
        return self._levels[k]

    def _local_delta_b(self, U):
        # sampled fields need not be periodic, so x-derivatives stay local here
        y, h = self.u.y, self.u.x_grid.spacing
        w = fornberg_weights(0.0, np.arange(-2, 3) * h, 2)[2]
        uxx = sum(w[i] * np.roll(U, 2 - i, axis=0) for i in range(5))
        D1 = derivative_matrix(y, 1, even_reflection=False, min_span=FD_MIN_SPAN)
        D2 = derivative_matrix(y, 2, even_reflection=False, min_span=FD_MIN_SPAN)
        uy, uyy = U @ D1.T, U @ D2.T
        out = uxx + uyy
        out[:, 1:] += self.b / y[1:] * uy[:, 1:]
        out[:, 0] += self.b * uyy[:, 0]
        return out

    def prepare(self, center, radius):
        cx, cy = center
        lo_y, hi_y = max(cy - radius, 0.0), cy + radius
        if cy - radius < 0 < cy or hi_y > self.y_max:
            raise QuadratureOutOfDomain(f"ball y-range [{lo_y}, {hi_y}] outside [0, {self.y_max}]")
        if 2 * radius >= 0.9 * self.period:
            raise QuadratureOutOfDomain("ball wider than the periodic cell")
        w = self._window
        if w is not None and w[0] <= cx - radius and cx + radius <= w[1] and w[2] <= lo_y and hi_y <= w[3]:
            return
        h = self.u.x_grid.spacing
        pad = 8 * h
        x0, x1 = cx - radius - pad, cx + radius + pad
        i0, i1 = int(math.floor(x0 / h)), int(math.ceil(x1 / h))
        idx = np.arange(i0, i1 + 1)
        xs = idx * h
        y = self.u.y
        j1 = min(int(np.searchsorted(y, hi_y)) + 8, y.size - 1)
        j0 = max(int(np.searchsorted(y, lo_y)) - 8, 0)
        ys = y[j0:j1 + 1]
        wrap = idx % self.u.x_grid.points_per_axis
        self._splines = {}
        self._sel = (xs, ys, wrap, slice(j0, j1 + 1))
        self._window = (xs[0], xs[-1], ys[0], ys[-1])

    def _spline(self, k, which):
        key = (k, which)
        if key not in self._splines:
            xs, ys, wrap, sl = self._sel
            data = self._level_data(k)[which][wrap][:, sl]
            self._splines[key] = RectBivariateSpline(xs, ys, data, kx=3, ky=3, s=0)
        return self._splines[key]

    def value(self, k, pts):
        return self._spline(k, 0).ev(pts[:, 0], pts[:, 1])

    def gradient(self, k, pts):
        return np.column_stack([self._spline(k, 1).ev(pts[:, 0], pts[:, 1]),
                                self._spline(k, 2).ev(pts[:, 0], pts[:, 1])])


def _as_sampler(u):
    if isinstance(u, HalfSpaceField):
        return GridFieldSampler(u)
    return u


def _prepare(s, q: BallQuadrature):
    if hasattr(s, "prepare"):
        s.prepare(q.center, q.radius)


# frequency -------------------------------------------------------------------

def _D_k(s, q, k):
    pts = q.volume_nodes
    g = s.gradient(k, pts)
    integrand = np.sum(g ** 2, axis=1) + s.value(k, pts) * s.value(k + 1, pts)
    return float(q.volume_weights @ integrand)


def compute_D(u, q: BallQuadrature) -> float:
    """``Σ_k ∫_{B_r} y^b (|∇U_k|² + U_k U_{k+1})`` for ``k = 0..m``."""
    s = _as_sampler(u)
    _prepare(s, q)
    return float(sum(_D_k(s, q, k) for k in range(s.m + 1)))


def compute_H(u, q: BallQuadrature) -> float:
    """``Σ_k ∫_{∂B_r} y^b U_k² dS`` for ``k = 0..m``."""
    s = _as_sampler(u)
    _prepare(s, q)
    pts = q.surface_nodes
    return float(sum(q.surface_weights @ s.value(k, pts) ** 2 for k in range(s.m + 1)))


def compute_N(u, q: BallQuadrature) -> float:
    s = _as_sampler(u)
    H = compute_H(s, q)
    if not H > 0:
        raise ZeroH(f"H vanishes at r = {q.radius}")
    return q.radius * compute_D(s, q) / H


@dataclass
class FrequencyReport:
    center: tuple[float, float]
    b: float
    m: int
    radii: np.ndarray
    D_values: np.ndarray
    H_values: np.ndarray
    N_values: np.ndarray
    Lambda_estimate: float
    margins: np.ndarray
    slopes: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.slopes is None:
            self.slopes = _log_slopes(self.radii, self.N_values)

    def to_dict(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in np.asarray(a, float)]
        return {"center": list(map(float, self.center)), "b": float(self.b), "m": int(self.m),
                "radii": clean(self.radii), "D": clean(self.D_values), "H": clean(self.H_values),
                "N": clean(self.N_values), "lambda_estimate": float(self.Lambda_estimate),
                "margins": clean(self.margins)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "D", "H", "N", "margin"])
            marg = list(self.margins) + [float("nan")]
            for row in zip(self.radii, self.D_values, self.H_values, self.N_values, marg):
                w.writerow([f"{v:.17g}" for v in row])
        return path

    @classmethod
    def from_values(cls, radii, N_values, center=(0.0, 0.0), b=0.0, m=0):
        """Report from given ``N(r)`` samples (``D``, ``H`` unknown)."""
        r = np.asarray(radii, float)
        N = np.asarray(N_values, float)
        slopes = _log_slopes(r, N)
        lam = _lambda_from_slopes(slopes)
        nan = np.full(r.size, np.nan)
        return cls(tuple(center), b, m, r, nan, nan, N, lam, slopes + lam, slopes)


def _log_slopes(r, N):
    r = np.asarray(r, float)
    N = np.asarray(N, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logN = np.where(N > 0, np.log(np.where(N > 0, N, 1.0)), np.nan)
    return np.diff(logN) / np.diff(r)


def _lambda_from_slopes(slopes):
    finite = slopes[np.isfinite(slopes)]
    if finite.size == 0:
        return 0.0
    return float(max(0.0, -finite.min()))


def frequency_scan(u, center, radii, half_ball: bool | None = None, n_radial: int = 24,
                   n_angular: int = 48, trace_tol: float = 1e-4) -> FrequencyReport:
    """``D``, ``H`` and ``N = r D / H`` over increasing radii about ``center``.

    ``Lambda_estimate = max(0, -min slope of log N)`` over the sampled radii;
    ``margins`` are the discrete slopes of ``log N + Lambda r``. For
    half-balls on a grid field the odd traces ``∂_y U_k(x, 0)``, ``k < m``,
    must be below ``trace_tol`` (relative to the field scale).
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be positive and strictly increasing")
    s = _as_sampler(u)
    cx, cy = float(center[0]), float(center[1])
    hb = cy == 0.0 if half_ball is None else half_ball
    if hb and isinstance(u, HalfSpaceField):
        scale = max(1.0, float(np.max(np.abs(u.values))))
        for k in range(u.order.m):
            res = odd_trace_residual(u, k)
            if res > trace_tol * scale:
                raise TraceConditionViolated(f"odd trace of U_{k} is {res:.3e}")
    if hasattr(s, "prepare"):
        s.prepare((cx, cy), radii[-1])
    D, H = [], []
    for r in radii:
        q = ball_quadrature((cx, cy), r, s.b, hb, n_radial, n_angular)
        D.append(compute_D(s, q))
        H.append(compute_H(s, q))
    D, H = np.array(D), np.array(H)
    if np.any(~(H > 0)):
        raise ZeroH("H vanishes on the scanned radii")
    N = radii * D / H
    slopes = _log_slopes(radii, N)
    lam = _lambda_from_slopes(slopes)
    return FrequencyReport((cx, cy), s.b, s.m, radii, D, H, N, lam, slopes + lam, slopes)


def monotonicity_check(report: FrequencyReport, Lambda: float, tol: float = 1e-6) -> tuple[bool, float]:
    """``d/dr log N >= -Lambda - tol`` wherever ``N > 1`` at both ends of a step."""
    N = np.asarray(report.N_values, float)
    mask = (N[:-1] > 1.0) & (N[1:] > 1.0) & np.isfinite(report.slopes)
    if not np.any(mask):
        return True, math.inf
    margins = report.slopes[mask] + Lambda
    worst = float(margins.min())
    return bool(worst >= -tol), worst


# identities ------------------------------------------------------------------

def _relative(lhs, rhs):
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


def rellich_residual(w, v, q: BallQuadrature) -> float:
    """Relative defect of the weighted Rellich identity with ``Δ_b W = V``.

    ``r ∫_{∂B} y^b (|∇W|² - 2 W_r²) = b ∫_B y^b |∇W|² - 2 ∫_B y^b (X·∇W) V``
    (one tangential dimension). ``X`` is measured from the center, so the
    identity needs a center on ``y = 0`` unless ``b = 0``.
    """
    sw, sv = _as_sampler(w), _as_sampler(v)
    if q.b != 0.0 and q.center[1] != 0.0:
        raise QuadratureOutOfDomain("weighted Rellich identity needs a center on y = 0")
    _prepare(sw, q)
    _prepare(sv, q)
    gs = sw.gradient(0, q.surface_nodes)
    wr = np.sum(gs * q.surface_normals, axis=1)
    lhs = q.radius * float(q.surface_weights @ (np.sum(gs ** 2, axis=1) - 2.0 * wr ** 2))
    gv = sw.gradient(0, q.volume_nodes)
    xdot = np.sum(q.offsets * gv, axis=1)
    V = sv.value(0, q.volume_nodes)
    rhs = (q.b * float(q.volume_weights @ np.sum(gv ** 2, axis=1))
           - 2.0 * float(q.volume_weights @ (xdot * V)))
    return _relative(lhs, rhs)


@dataclass(frozen=True)
class InteriorExterior:
    lhs: float
    rhs_surface: float
    rhs_volume: float
    C_empirical: float
    identity_residual: float

    def __iter__(self):
        return iter((self.lhs, self.rhs_surface + self.rhs_volume, self.C_empirical))


def interior_exterior_check(w, v, q: BallQuadrature) -> InteriorExterior:
    """``∫_B y^b W²`` against ``r ∫_{∂B} y^b W² + ∫_B V²``.

    ``C_empirical`` is the ratio of the two sides (0 when both vanish).
    ``identity_residual`` logs the defect of
    ``∫ y^b|∇W|² + (2+b) ∫ y^b W² = r ∫_{∂B} y^b W² - ∫ y^b W V``,
    which is reported, not asserted.
    """
    sw, sv = _as_sampler(w), _as_sampler(v)
    _prepare(sw, q)
    _prepare(sv, q)
    W = sw.value(0, q.volume_nodes)
    V = sv.value(0, q.volume_nodes)
    lhs = float(q.volume_weights @ W ** 2)
    surf = q.radius * float(q.surface_weights @ sw.value(0, q.surface_nodes) ** 2)
    # the volume term is unweighted: divide the y^b factor back out
    pts_y = q.volume_nodes[:, 1]
    plain = q.volume_weights / pts_y ** q.b if q.b != 0 else q.volume_weights
    vol = float(plain @ V ** 2)
    rhs = surf + vol
    C = lhs / rhs if rhs > 0 else 0.0
    g = sw.gradient(0, q.volume_nodes)
    left = float(q.volume_weights @ np.sum(g ** 2, axis=1)) + (2.0 + q.b) * lhs
    right = surf - float(q.volume_weights @ (W * V))
    return InteriorExterior(lhs, surf, vol, C, _relative(left, right))


def dk_boundary_identity_residual(u, q: BallQuadrature, k: int) -> float:
    """Relative defect of ``D_k(r) = ∫_{∂B_r} y^b U_k ∂_r U_k dS``."""
    s = _as_sampler(u)
    _prepare(s, q)
    vol = _D_k(s, q, k)
    g = s.gradient(k, q.surface_nodes)
    ur = np.sum(g * q.surface_normals, axis=1)
    surf = float(q.surface_weights @ (s.value(k, q.surface_nodes) * ur))
    return _relative(vol, surf)


# boundary traces -------------------------------------------------------------

def _abs_integral(x, f, a, c):
    """``∫_a^c |I f|`` for the piecewise-linear interpolant ``I f`` on nodes ``x``."""
    inside = (x > a) & (x < c)
    xs = np.concatenate([[a], x[inside], [c]])
    fs = np.concatenate([[np.interp(a, x, f)], f[inside], [np.interp(c, x, f)]])
    h = np.diff(xs)
    fa, fb = fs[:-1], fs[1:]
    same = fa * fb >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = (fa ** 2 + fb ** 2) / (2.0 * np.abs(fa - fb))
    seg = np.where(same, 0.5 * (np.abs(fa) + np.abs(fb)), np.where(np.isfinite(cross), cross, 0.0))
    return float(np.sum(seg * h))


def vanishing_order(f: BoundaryFunction, x0: float, radii) -> float:
    """Least-squares slope of ``log ∫_{|x-x0|<r} |f|`` against ``log r``.

    The integral uses the piecewise-linear interpolant of the periodic
    samples. Radii must decrease; radii that are not resolved by the grid or
    give a vanishing integral are dropped.
    """
    grid = f.grid
    if grid.n_dim != 1:
        raise ValueError("vanishing_order works on 1-D traces")
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    L, h = grid.period, grid.spacing
    x = grid.nodes
    # unwrap three periods so windows never hit the seam
    xe = np.concatenate([x - L, x, x + L])
    fe = np.tile(f.values, 3)
    logs_r, logs_I = [], []
    for r in radii:
        if r < 2 * h or r >= 0.5 * L:
            continue
        I = _abs_integral(xe, fe, x0 - r, x0 + r)
        if I > 0 and np.isfinite(I):
            logs_r.append(math.log(r))
            logs_I.append(math.log(I))
    if len(logs_r) < 3:
        raise InsufficientRadii(f"only {len(logs_r)} usable radii")
    slope, _ = np.polyfit(logs_r, logs_I, 1)
    return float(slope)


def fractional_harmonic_trace(grid: XGrid, order: FractionalOrder, interval,
                              n_modes: int = 16) -> tuple[BoundaryFunction, float]:
    """Trace whose ``(-Δ)^γ`` nearly vanishes on ``interval``.

    Takes the combination of ``cos(jx), sin(jx)``, ``j = 1..n_modes``, that
    minimizes the sampled ``(-Δ)^γ f`` on the interval (smallest right
    singular vector). Returns the trace and the relative residual
    ``max_interval |(-Δ)^γ f| / max |(-Δ)^γ f|``.
    """
    if grid.n_dim != 1:
        raise ValueError("fractional_harmonic_trace works on 1-D grids")
    a, c = interval
    x = grid.nodes
    sel = (x >= a) & (x <= c)
    k = 2.0 * np.pi / grid.period * np.arange(1, n_modes + 1)
    basis = np.concatenate([np.cos(np.outer(x, k)), np.sin(np.outer(x, k))], axis=1)
    mult = np.concatenate([k, k]) ** (2.0 * order.gamma)
    A = basis[sel] * mult
    _, _, vt = np.linalg.svd(A, full_matrices=False)
    coef = vt[-1]
    # fixed sign for reproducibility
    coef = coef * np.sign(coef[np.argmax(np.abs(coef))])
    f = basis @ coef
    lap = basis @ (mult * coef)
    resid = float(np.max(np.abs(lap[sel])) / np.max(np.abs(lap)))
    return BoundaryFunction(grid, f), resid
