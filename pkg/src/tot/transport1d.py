"""Exact 1D optimal transport between positive densities on the circle.

The monotone rearrangement between two unit-mass densities f, g on the
circle is T_theta = Ginv(F + theta) for any shift theta of the cumulative
functions.  Among those, exactly one shift makes the displacement
x - T(x) have zero mean; that is the map of the form id - psi' with psi a
periodic potential, and it is also the cheapest one for the quadratic
cost (verified by property test, not assumed).  The shift is found by
bisection on the strictly decreasing shift-to-mean-displacement function.

Cumulative functions are exact primitives of the closed form when the
density carries one, otherwise of the trigonometric interpolant of the
samples.  Inverses use safeguarded (bracketed) Newton iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ConstructionError, ConvergenceError, CutLocusError, PositivityError
from .grid import antideriv_values, wavenumbers
from .trig import TrigPoly1D

NEWTON_TOL = 1e-14
SHIFT_TOL = 1e-13
MAX_DISPLACEMENT = 0.5


@dataclass
class CircleDensity:
    """Positive density on the circle, renormalized to unit mass.

    ``values`` are samples at nodes i/m; ``closed_form``, when present, is
    the exact trigonometric definition (already normalized).
    """

    values: np.ndarray
    closed_form: TrigPoly1D | None = None
    _spectrum: np.ndarray | None = dataclass_field(default=None, repr=False)

    @property
    def m(self):
        return len(self.values)

    def nodes(self):
        return np.arange(self.m) / self.m

    def spectrum(self):
        """DFT coefficients of the samples (used by the interpolant path)."""
        if self._spectrum is None:
            self._spectrum = np.fft.fft(self.values) / self.m
        return self._spectrum


def circle_density(values=None, closed_form=None, m=None):
    """Build a validated, unit-mass CircleDensity.

    Provide samples, a closed form plus a sample count, or both.
    """
    if values is None:
        if closed_form is None or m is None:
            raise ValueError("need samples or a closed form with a sample count")
        closed_form = closed_form.normalized()
        values = closed_form(np.arange(m) / m)
    values = np.asarray(values, float).copy()
    if values.ndim != 1 or len(values) < 4:
        raise ValueError("need a 1D array of at least 4 samples")
    if np.min(values) <= 0.0:
        raise PositivityError(
            f"density not positive: min = {np.min(values):.3g}")
    mean = values.mean()
    values /= mean
    if closed_form is not None and abs(mean - 1.0) > 1e-9:
        closed_form = closed_form.scaled(1.0 / mean)
    return CircleDensity(values, closed_form)


def density_at(d, x):
    """Density value at arbitrary points (closed form or trig interpolant)."""
    x = np.asarray(x, float)
    if d.closed_form is not None:
        return d.closed_form(x)
    c = d.spectrum()
    k = wavenumbers(d.m)
    phase = np.exp(2j * np.pi * np.multiply.outer(np.mod(x, 1.0), k))
    return (phase @ c).real


def cdf_at(d, x):
    """Primitive of the density from 0, evaluated at points in [0, 1]."""
    x = np.asarray(x, float)
    if d.closed_form is not None:
        return d.closed_form.antiderivative(x)
    c = d.spectrum()
    k = wavenumbers(d.m)
    nz = k != 0
    coef = np.zeros_like(c)
    coef[nz] = c[nz] / (2j * np.pi * k[nz])
    phase = np.exp(2j * np.pi * np.multiply.outer(x, k)) - 1.0
    return c[0].real * x + (phase @ coef).real


class CircleCdf:
    """Callable cumulative function of a circle density: F(0)=0, F(1)=1."""

    def __init__(self, density):
        self.density = density

    def __call__(self, x):
        return cdf_at(self.density, x)


def cdf(d):
    """Cumulative function of a positive density (error if nonpositive)."""
    if np.min(d.values) <= 0.0:
        raise PositivityError("density not positive")
    return CircleCdf(d)


def invert_lifted_cdf(d, w, x0=None, tol=NEWTON_TOL, max_iter=100):
    """Solve Glift(y) = w for the lifted cumulative function of ``d``.

    Glift(y + 1) = Glift(y) + 1, so w may be any real.  Vectorized
    safeguarded Newton: a bisection bracket guards every step and the
    density lower bound makes the iteration globally convergent.
    """
    w = np.asarray(w, float)
    base = np.floor(w)
    r = w - base
    lo = np.zeros_like(r)
    hi = np.ones_like(r)
    if x0 is not None:
        y = np.clip(np.asarray(x0, float) - base, 0.0, 1.0)
    else:
        y = r.copy()
    err = cdf_at(d, y) - r
    for _ in range(max_iter):
        # a point is done when its residual is small or its bracket collapsed
        done = (np.abs(err) <= tol) | (hi - lo <= 1e-15)
        if np.all(done):
            break
        lo = np.where(err < 0, y, lo)
        hi = np.where(err > 0, y, hi)
        candidate = y - err / density_at(d, y)
        outside = (candidate <= lo) | (candidate >= hi) | ~np.isfinite(candidate)
        y = np.where(outside, 0.5 * (lo + hi), candidate)
        err = cdf_at(d, y) - r
    else:
        raise ConvergenceError("cdf inversion did not converge",
                               residual=float(np.max(np.abs(err))))
    return base + y


@dataclass
class CircleMap:
    """Monotone circle map stored as displacement samples x - T(x) at i/m.

    The lift satisfies T(x+1) = T(x) + 1; after shift selection the
    displacement has zero mean and the map is id - psi' for a periodic
    potential psi.
    """

    displacement: np.ndarray

    @property
    def m(self):
        return len(self.displacement)

    def nodes(self):
        return np.arange(self.m) / self.m

    def map_values(self):
        return self.nodes() - self.displacement

    def displacement_at(self, x):
        """Trigonometric interpolation of the displacement at arbitrary x."""
        c = np.fft.fft(self.displacement) / self.m
        k = wavenumbers(self.m)
        phase = np.exp(2j * np.pi * np.multiply.outer(np.mod(np.asarray(x, float), 1.0), k))
        return (phase @ c).real

    def __call__(self, x):
        return np.asarray(x, float) - self.displacement_at(x)


def _check_map(displacement, m):
    tmap = np.arange(m) / m - displacement
    increments = np.diff(np.append(tmap, tmap[0] + 1.0))
    if np.min(increments) <= 0.0:
        raise ConstructionError("transport map is not strictly increasing")
    if np.max(np.abs(displacement)) >= MAX_DISPLACEMENT:
        raise CutLocusError(
            "cut-locus violation: displacement reached half the circumference "
            f"(sup = {np.max(np.abs(displacement)):.3g})")


def monotone_circle_map(f, g):
    """Monotone transport map from f to g with zero-mean displacement.

    Parameters
    ----------
    f, g : CircleDensity
        Positive unit-mass densities; the map is sampled at f's nodes.

    Returns
    -------
    CircleMap
        Map with ``sup |x - T(x)| < 1/2`` and mean displacement below 1e-12.
    """
    for d in (f, g):
        if np.min(d.values) <= 0.0:
            raise PositivityError("density not positive")
    m = f.m
    x = np.arange(m) / m
    s = cdf_at(f, x)

    y = invert_lifted_cdf(g, s)
    mean0 = float(np.mean(x - y))
    if abs(mean0) <= SHIFT_TOL:
        theta, ymap = 0.0, y
    else:
        gmax = float(np.max(g.values))
        # mean displacement is strictly decreasing in theta with slope in
        # [-1/min g, -1/max g], so the root lies within |mean0| * max g
        if mean0 > 0:
            lo, hi = 0.0, mean0 * gmax * 1.001 + 1e-12
        else:
            lo, hi = mean0 * gmax * 1.001 - 1e-12, 0.0
        theta, ymap = _bisect_shift(g, s, x, lo, hi, y)
    # polish at full precision with the selected shift
    ymap = invert_lifted_cdf(g, s + theta, x0=ymap, tol=1e-15)
    displacement = x - ymap
    _check_map(displacement, m)
    return CircleMap(displacement)


def _bisect_shift(g, s, x, lo, hi, y_warm):
    y = y_warm
    for _ in range(200):
        theta = 0.5 * (lo + hi)
        y = invert_lifted_cdf(g, s + theta, x0=y)
        mean = float(np.mean(x - y))
        if abs(mean) <= SHIFT_TOL or (hi - lo) <= 1e-15:
            return theta, y
        if mean > 0:
            lo = theta
        else:
            hi = theta
    raise ConvergenceError("shift bisection did not converge", residual=mean)


def potential_1d(f, g):
    """Zero-mean periodic potential with T = id - psi'.

    psi is the zero-mean primitive of the displacement of the monotone
    zero-mean-displacement map from f to g.
    """
    tmap = monotone_circle_map(f, g)
    return potential_from_map(tmap)


def potential_from_map(tmap):
    d = tmap.displacement - np.mean(tmap.displacement)
    return antideriv_values(d, axis=0)


def transport_cost(f, g, displacement):
    """Quadratic transport cost 0.5 * int (x - T(x))^2 f(x) dx (trapezoid)."""
    return 0.5 * float(np.mean(displacement ** 2 * f.values))


def pushforward_quantile_error(f, g, tmap, n_quantiles=256):
    """max_u |Glift(T(Finv(u))) - u - theta| over interior quantiles u.

    Zero (to solver accuracy) exactly when T pushes f forward to g; used
    as the module's pushforward certificate.
    """
    u = (np.arange(n_quantiles) + 0.5) / n_quantiles
    x = invert_lifted_cdf(f, u)
    tx = tmap(x)
    values = np.floor(tx) + cdf_at(g, np.mod(tx, 1.0)) - cdf_at(f, np.mod(x, 1.0))
    theta = np.mean(values)
    return float(np.max(np.abs(values - theta)))
