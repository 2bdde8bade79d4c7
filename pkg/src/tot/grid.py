"""Periodic grids and spectral calculus on the unit 2-torus.

Fields live on uniform n1 x n2 grids with nodes (i/n1, j/n2); the first
array index runs along x1 (row-major storage, x1 is the slow index).
Differentiation acts on the trigonometric interpolant: first derivatives
zero the Nyquist mode (odd symbol), second derivatives keep it with
symbol -(pi*n)^2.  Off-grid evaluation is periodic bicubic by default and
exact whenever the field carries a closed-form definition.

All operations are pure: input fields are never mutated, so values may be
shared read-only across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GridSizeError
from .trig import TrigPoly2D

MIN_SIZE = 8


@dataclass(frozen=True)
class PeriodicGrid:
    n1: int
    n2: int

    @property
    def h1(self):
        return 1.0 / self.n1

    @property
    def h2(self):
        return 1.0 / self.n2

    @property
    def shape(self):
        return (self.n1, self.n2)

    def nodes1(self):
        return np.arange(self.n1) / self.n1

    def nodes2(self):
        return np.arange(self.n2) / self.n2

    def mesh(self):
        """Node coordinates as broadcastable (n1, 1) and (1, n2) arrays."""
        return self.nodes1()[:, None], self.nodes2()[None, :]


def build_grid(n1, n2):
    """Validate sizes and build a periodic grid with nodes (i/n1, j/n2)."""
    n1, n2 = int(n1), int(n2)
    for n in (n1, n2):
        if n < MIN_SIZE or n % 2 != 0:
            raise GridSizeError(
                f"grid size must be even and >= {MIN_SIZE} (got n1={n1}, n2={n2})")
    return PeriodicGrid(n1, n2)


@dataclass
class ScalarField:
    """Real grid function on the torus.

    ``zero_mean`` marks fields normalized to zero average; ``closed_form``
    carries an exact trigonometric definition when one exists (densities),
    used by :func:`eval_periodic` to bypass interpolation.
    """

    grid: PeriodicGrid
    values: np.ndarray
    zero_mean: bool = False
    closed_form: TrigPoly2D | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    def with_values(self, values, zero_mean=False):
        return ScalarField(self.grid, values, zero_mean=zero_mean)


@dataclass
class VectorField:
    v1: ScalarField
    v2: ScalarField

    def __post_init__(self):
        if self.v1.grid != self.v2.grid:
            raise ValueError("component grids differ")

    @property
    def grid(self):
        return self.v1.grid


@dataclass
class SymMatrixField:
    """Symmetric 2x2 matrix field; only the upper triangle is stored."""

    m11: ScalarField
    m12: ScalarField
    m22: ScalarField

    def __post_init__(self):
        if not (self.m11.grid == self.m12.grid == self.m22.grid):
            raise ValueError("component grids differ")

    @property
    def grid(self):
        return self.m11.grid


def field(grid, values, zero_mean=False, closed_form=None):
    return ScalarField(grid, values, zero_mean=zero_mean, closed_form=closed_form)


def zero_field(grid):
    return ScalarField(grid, np.zeros(grid.shape), zero_mean=True)


# ---------------------------------------------------------------------------
# array-level spectral kernels (shared by the solver modules)

def wavenumbers(n):
    """Signed integer wavenumbers [0, 1, ..., n/2-1, -n/2, ..., -1]."""
    return np.fft.fftfreq(n, d=1.0 / n)


@lru_cache(maxsize=None)
def _deriv_symbol(n, order):
    k = wavenumbers(n)
    if order == 1:
        s = 2j * np.pi * k
        s[n // 2] = 0.0          # Nyquist zeroed: odd symbol, keeps output real
    elif order == 2:
        s = -(2.0 * np.pi * k) ** 2 + 0j   # Nyquist kept: -(pi*n)^2
    else:
        raise ValueError("order must be 1 or 2")
    s.setflags(write=False)
    return s


@lru_cache(maxsize=None)
def _antideriv_symbol(n):
    k = wavenumbers(n)
    s = np.zeros(n, dtype=complex)
    nz = k != 0
    s[nz] = 1.0 / (2j * np.pi * k[nz])
    s[n // 2] = 0.0
    s.setflags(write=False)
    return s


def _apply_symbol(values, symbol, axis):
    shape = [1] * values.ndim
    shape[axis] = len(symbol)
    spec = np.fft.fft(values, axis=axis) * symbol.reshape(shape)
    return np.fft.ifft(spec, axis=axis).real


def deriv_values(values, axis, order=1):
    """Spectral derivative of a grid array along numpy axis 0 (x1) or 1 (x2);
    also works on 1D arrays with axis=0."""
    return _apply_symbol(values, _deriv_symbol(values.shape[axis], order), axis)


def antideriv_values(values, axis):
    """Zero-mean spectral primitive along an axis.  The input must have zero
    mean along that axis (its mean mode is discarded)."""
    return _apply_symbol(values, _antideriv_symbol(values.shape[axis]), axis)


# ---------------------------------------------------------------------------
# public operations on fields

def spectral_derivative(f, axis, order=1):
    """Derivative of the trigonometric interpolant of ``f``.

    Parameters
    ----------
    axis : {1, 2}
        Coordinate to differentiate (x1 or x2).
    order : {1, 2}
        Derivative order.
    """
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if not np.all(np.isfinite(f.values)):
        raise ValueError("field values must be finite")
    out = deriv_values(f.values, axis - 1, order)
    return ScalarField(f.grid, out, zero_mean=(order == 1))


def integrate_mean(f):
    """Torus average of the field (exact trapezoid rule on a periodic grid)."""
    return float(np.mean(f.values))


def project_zero_mean(f):
    """Subtract the average; the result is flagged zero-mean."""
    return ScalarField(f.grid, f.values - np.mean(f.values), zero_mean=True)


def _bicubic_eval(grid, values, x1, x2):
    # tensor-product periodic cubic splines: interpolate rows in x2 first,
    # then each point's column in x1
    t2 = np.arange(grid.n2 + 1) / grid.n2
    wrapped2 = np.concatenate([values, values[:, :1]], axis=1)
    rows = CubicSpline(t2, wrapped2, axis=1, bc_type="periodic")(x2)  # (n1, P)
    t1 = np.arange(grid.n1 + 1) / grid.n1
    cols = np.concatenate([rows, rows[:1, :]], axis=0)                # (n1+1, P)
    spline1 = CubicSpline(t1, cols, axis=0, bc_type="periodic")
    out = np.empty(len(x1))
    for p in range(len(x1)):
        out[p] = spline1(x1[p])[p]
    return out


def eval_periodic(f, points):
    """Field values at arbitrary points, wrapped into [0,1)^2.

    Uses the exact closed form when the field carries one, otherwise a
    periodic bicubic spline of the grid values.  Returns a 1D array, one
    value per point.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    x1 = np.mod(pts[:, 0], 1.0)
    x2 = np.mod(pts[:, 1], 1.0)
    if f.closed_form is not None:
        return np.asarray(f.closed_form(x1, x2), float)
    return _bicubic_eval(f.grid, f.values, x1, x2)
