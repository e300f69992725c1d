"""Order parameters, periodic grids, Fourier transforms and the spectral fractional Laplacian.

Fourier convention
------------------
Coefficients are Fourier-series coefficients on the periodic box,
``f_hat[k] = N**(-n) * sum_j f[j] exp(-i xi_k . x_j)`` (``norm="forward"``),
so that ``f = sum_k f_hat[k] exp(i xi_k . x)`` and box averages obey
``mean(|f|**2) = sum_k |f_hat[k]|**2``. Every integral over x in this
package is a box average, so the continuum Plancherel constant is
:data:`PLANCHEREL_CONSTANT` = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridError, IntegerOrder, NonPositiveOrder

__all__ = [
    "PLANCHEREL_CONSTANT",
    "FractionalOrder",
    "make_order",
    "XGrid",
    "BoundaryFunction",
    "Spectrum",
    "dft_forward",
    "dft_inverse",
    "significant_modes",
    "hgamma_seminorm_sq",
    "frac_laplacian_spectral",
]

PLANCHEREL_CONSTANT = 1.0


@dataclass(frozen=True)
class FractionalOrder:
    """The order ``gamma`` of ``(-Δ)^gamma`` and the integers/weights derived from it.

    ``m = floor(gamma)``, ``a = 1 - 2 gamma`` (weight of the second-order
    extension equation) and ``b = 2m + 1 - 2 gamma = a + 2m`` (weight of the
    higher-order operator).
    """

    gamma: float
    m: int
    a: float
    b: float

    def __post_init__(self):
        if not (self.m < self.gamma < self.m + 1):
            raise ValueError(f"inconsistent order: m={self.m}, gamma={self.gamma}")


def make_order(gamma: float) -> FractionalOrder:
    gamma = float(gamma)
    if not math.isfinite(gamma) or gamma <= 0:
        raise NonPositiveOrder(f"gamma must be positive, got {gamma}")
    if gamma == math.floor(gamma):
        raise IntegerOrder(f"gamma must be non-integer, got {gamma}")
    m = int(math.floor(gamma))
    return FractionalOrder(gamma=gamma, m=m, a=1.0 - 2.0 * gamma,
                           b=2.0 * m + 1.0 - 2.0 * gamma)


@dataclass(frozen=True)
class XGrid:
    """Uniform periodic grid on ``[0, period)**n_dim``."""

    n_dim: int
    points_per_axis: int
    period: float = 2.0 * math.pi

    def __post_init__(self):
        if self.n_dim not in (1, 2):
            raise GridError(f"n_dim must be 1 or 2, got {self.n_dim}")
        n = self.points_per_axis
        if n < 8 or n & (n - 1):
            raise GridError(f"points_per_axis must be a power of two >= 8, got {n}")
        if not self.period > 0:
            raise GridError(f"period must be positive, got {self.period}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n_dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.n_dim

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_axis

    @property
    def nodes(self) -> np.ndarray:
        """1-D node coordinates along each axis."""
        return np.arange(self.points_per_axis) * self.spacing

    def mesh(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*([self.nodes] * self.n_dim), indexing="ij")

    def wavenumbers(self, real: bool = False) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers per axis, broadcastable against the FFT output.

        With ``real=True`` the last axis follows ``rfftn`` layout.
        """
        n, L = self.points_per_axis, self.period
        full = 2.0 * np.pi * np.fft.fftfreq(n, d=L / n)
        half = 2.0 * np.pi * np.fft.rfftfreq(n, d=L / n)
        axes = []
        for ax in range(self.n_dim):
            k = half if (real and ax == self.n_dim - 1) else full
            shape = [1] * self.n_dim
            shape[ax] = k.size
            axes.append(k.reshape(shape))
        return tuple(axes)

    def frequency_magnitudes(self, real: bool = False) -> np.ndarray:
        ks = self.wavenumbers(real)
        return np.sqrt(sum(k ** 2 for k in ks))


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Samples of ``f`` on the nodes of an :class:`XGrid`."""

    grid: XGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} samples, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise GridError("boundary values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: XGrid, func) -> "BoundaryFunction":
        return cls(grid, func(*grid.mesh()))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier-series coefficients (full ``fftn`` layout) of a real grid function."""

    grid: XGrid
    coefficients: np.ndarray
    frequency_magnitudes: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).reshape(self.grid.shape)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "frequency_magnitudes",
                           np.broadcast_to(self.grid.frequency_magnitudes(), c.shape))

    @cached_property
    def parseval_constant(self) -> float:
        """``C`` with ``sum(values**2) = C * sum(|coefficients|**2)``."""
        return float(self.grid.size)


def dft_forward(f: BoundaryFunction) -> Spectrum:
    return Spectrum(f.grid, np.fft.fftn(f.values, norm="forward"))


def dft_inverse(s: Spectrum) -> BoundaryFunction:
    return BoundaryFunction(s.grid, np.fft.ifftn(s.coefficients, norm="forward").real)


ROUNDOFF_FLOOR = 4.0 * np.finfo(float).eps


def significant_modes(coefficients: np.ndarray) -> np.ndarray:
    """Mask of coefficients above round-off relative to the largest one.

    Coefficients at the round-off floor are indistinguishable from zero, and
    multipliers such as ``|xi|^(2 gamma)`` would otherwise amplify them.
    """
    mag = np.abs(coefficients)
    return mag > ROUNDOFF_FLOOR * np.max(mag, initial=0.0)


def _multiplier(grid: XGrid, gamma: float) -> np.ndarray:
    return grid.frequency_magnitudes() ** (2.0 * gamma)


def hgamma_seminorm_sq(f: BoundaryFunction, order: FractionalOrder) -> float:
    """``sum_xi |xi|^(2 gamma) |f_hat(xi)|^2`` in the package convention."""
    s = dft_forward(f)
    return float(np.sum(_multiplier(f.grid, order.gamma) * np.abs(s.coefficients) ** 2))


def frac_laplacian_spectral(f: BoundaryFunction, order: FractionalOrder) -> BoundaryFunction:
    """``(-Δ)^gamma f`` as the Fourier multiplier ``|xi|^(2 gamma)``.

    Round-off level coefficients (see :func:`significant_modes`) are dropped.
    """
    c = dft_forward(f).coefficients
    c = np.where(significant_modes(c), _multiplier(f.grid, order.gamma) * c, 0.0)
    return dft_inverse(Spectrum(f.grid, c))
