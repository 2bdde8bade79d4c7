"""Cost family, Monge-Ampere residual operators and map verification.

The quadratic cost is induced by the diagonal matrix A = diag(1, a22)
with a22 = lambda(t) degenerating to 0 as t -> 0.  For a potential u with
A - D^2(u) positive definite, x -> x - A^{-1} grad(u) is a diffeomorphism
of the torus and the residual

    f - g(id - A^{-1} grad u) det(I - A^{-1} D^2 u)

vanishes exactly at the optimal potential.  ``decomposed_residual``
evaluates the same operator in the decomposed coordinates
u = u1(x1) + lambda * u2(x1, x2), which extends smoothly to t = 0 where
the determinant becomes triangular.

All 2x2 linear algebra is in closed form; the composition with g always
takes the analytic path, so the residual is quadrature-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, ConcavityError
from .grid import ScalarField, VectorField, deriv_values

__all__ = [
    "CostMatrix", "CostSchedule", "identity_cost", "c_concavity_margin",
    "monge_ampere_residual", "decomposed_residual", "transport_map",
    "pushforward_residual", "t0_margins",
]


@dataclass(frozen=True)
class CostMatrix:
    """A = diag(1, a22) at time t, with the schedule rate a22dot."""

    t: float
    a22: float
    a22dot: float

    def __post_init__(self):
        if not (self.a22 > 0.0 and math.isfinite(self.a22)):
            raise ValueError(f"a22 must be positive and finite, got {self.a22}")


@dataclass(frozen=True)
class CostSchedule:
    """t -> (lambda_t, lambda_dot_t) defining A_t = diag(1, lambda_t)."""

    kind: str
    lam: Callable[[float], float]
    lam_dot: Callable[[float], float]

    @staticmethod
    def linear():
        return CostSchedule("linear", lambda t: t, lambda t: 1.0)

    @staticmethod
    def power(p):
        p = float(p)
        if p < 1.0:
            raise ValueError("power schedules need p >= 1")
        return CostSchedule("custom",
                            lambda t: t ** p,
                            lambda t: p * t ** (p - 1.0))

    @staticmethod
    def custom(lam, lam_dot):
        if lam(0.0) != 0.0:
            raise ValueError("schedule must satisfy lambda(0) = 0")
        return CostSchedule("custom", lam, lam_dot)

    def matrix(self, t):
        if not t > 0.0:
            raise ValueError("cost matrix is defined for t > 0 only")
        return CostMatrix(float(t), float(self.lam(t)), float(self.lam_dot(t)))


def identity_cost():
    """A = diag(1, 1): the endpoint t = 1 of the linear schedule."""
    return CostMatrix(1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# derivative bundles

def gradient_values(values):
    return deriv_values(values, 0, 1), deriv_values(values, 1, 1)


def hessian_values(values):
    u11 = deriv_values(values, 0, 2)
    u12 = deriv_values(deriv_values(values, 0, 1), 1, 1)
    u22 = deriv_values(values, 1, 2)
    return u11, u12, u22


def _eigmin_2x2(m11, m12, m22):
    half_trace = 0.5 * (m11 + m22)
    radius = np.sqrt((0.5 * (m11 - m22)) ** 2 + m12 ** 2)
    return half_trace - radius


def margin_values(cost, u11, u12, u22):
    """Smallest eigenvalue of A - D^2(u) over the grid."""
    return float(np.min(_eigmin_2x2(1.0 - u11, -u12, cost.a22 - u22)))


def c_concavity_margin(cost, u):
    """min over nodes of the smaller eigenvalue of A - D^2(u).

    A positive margin certifies that id - A^{-1} grad(u) is a
    diffeomorphism of the torus; a negative value is the failure signal
    (no exception is raised here).
    """
    return margin_values(cost, *hessian_values(u.values))


@dataclass
class ResidualState:
    """Everything the residual and its linearization share at one state."""

    cost: CostMatrix
    grad1: np.ndarray
    grad2: np.ndarray
    u11: np.ndarray
    u12: np.ndarray
    u22: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    g_at_t: np.ndarray
    residual: np.ndarray
    margin: float

    @property
    def sup_residual(self):
        return float(np.max(np.abs(self.residual)))


def residual_state(cost, values, pair, require_margin=True):
    grid = pair.grid
    # x2-derivatives are taken on the fiber-fluctuating part only (the row
    # mean has none analytically); this avoids machine noise from the
    # x1-only component being amplified by the 1/a22 divisions at small t
    fluct = values - values.mean(axis=1, keepdims=True)
    u11 = deriv_values(values, 0, 2)
    u12 = deriv_values(deriv_values(fluct, 0, 1), 1, 1)
    u22 = deriv_values(fluct, 1, 2)
    margin = margin_values(cost, u11, u12, u22)
    if require_margin and margin <= 0.0:
        raise ConcavityError(
            f"not c-concave: min eig(A - D2 u) = {margin:.3g} <= 0")
    g1 = deriv_values(values, 0, 1)
    g2 = deriv_values(fluct, 1, 1)
    x1, x2 = grid.mesh()
    t1 = x1 - g1
    t2 = x2 - g2 / cost.a22
    g_at_t = pair.g_poly(np.mod(t1, 1.0), np.mod(t2, 1.0))
    det = (1.0 - u11) * (1.0 - u22 / cost.a22) - (u12 * u12) / cost.a22
    residual = pair.f_values - g_at_t * det
    return ResidualState(cost, g1, g2, u11, u12, u22, t1, t2, g_at_t,
                         residual, margin)


def monge_ampere_residual(cost, u, pair):
    """Pointwise residual f - g(id - A^{-1} grad u) det(I - A^{-1} D^2 u).

    Precondition: A - D^2(u) positive definite everywhere (raises
    ``ConcavityError`` otherwise).  The residual mean is a diagnostic and
    is deliberately not projected out.
    """
    st = residual_state(cost, u.values, pair)
    return ScalarField(pair.grid, st.residual)


def t0_margins(u1_values, u2_values):
    """(min(1 - d11 u1), min(1 - d22 u2)): the t = 0 admissibility margins."""
    d11 = deriv_values(np.asarray(u1_values, float), 0, 2)
    d22 = deriv_values(np.asarray(u2_values, float), 1, 2)
    return float(np.min(1.0 - d11)), float(np.min(1.0 - d22))


def check_admissible(t, u1_values, u2_values, schedule, eps=0.0):
    """Membership test for the admissible neighbourhood of the decomposed
    potentials; raises ``AdmissibilityError`` naming the failed inequality."""
    u1_values = np.asarray(u1_values, float)
    u2_values = np.asarray(u2_values, float)
    if t == 0.0:
        m1, m2 = t0_margins(u1_values, u2_values)
        if m1 <= eps:
            raise AdmissibilityError(
                f"admissibility failed at t=0: min(1 - d11 u1) = {m1:.3g} <= {eps:.3g}")
        if m2 <= eps:
            raise AdmissibilityError(
                f"admissibility failed at t=0: min(1 - d22 u2) = {m2:.3g} <= {eps:.3g}")
        return
    lam = schedule.lam(t)
    d11_u1 = deriv_values(u1_values, 0, 2)
    d11_u2 = deriv_values(u2_values, 0, 2)
    m1 = float(np.min(1.0 - d11_u1[:, None] - lam * d11_u2))
    if m1 <= eps:
        raise AdmissibilityError(
            f"admissibility failed at t={t:g}: min(1 - d11 u1 - lam d11 u2) "
            f"= {m1:.3g} <= {eps:.3g}")
    cost = schedule.matrix(t)
    combined = u1_values[:, None] + lam * u2_values
    margin = margin_values(cost, *hessian_values(combined))
    if margin <= eps * lam:
        raise AdmissibilityError(
            f"admissibility failed at t={t:g}: min eig(A - D2 u) = {margin:.3g} "
            f"<= eps*lambda = {eps * lam:.3g}")


def split_residual_values(t, u1_values, u2_values, pair, schedule=None):
    """Residual of u1 + lambda_t u2 evaluated in split form.

    Mathematically identical to the assembled residual, but every term is
    O(1) in lambda:

        f - g(x1 - d1 u1 - lam d1 u2, x2 - d2 u2)
          * [ (1 - d11 u1 - lam d11 u2)(1 - d22 u2) - lam (d12 u2)^2 ].

    At lambda = 0 this is exactly the t = 0 limit operator.  The assembled
    evaluation loses the fiber component to rounding once lambda is small
    (floor ~ eps * (pi n)^2 / lambda); this form has no such floor, so the
    small-t solvers certify their states with it.
    """
    schedule = schedule or CostSchedule.linear()
    lam = 0.0 if t == 0.0 else schedule.lam(t)
    u1_values = np.asarray(u1_values, float)
    grid = pair.grid
    d1_u1 = deriv_values(u1_values, 0, 1)[:, None]
    d11_u1 = deriv_values(u1_values, 0, 2)[:, None]
    d1_u2 = deriv_values(u2_values, 0, 1)
    d11_u2 = deriv_values(u2_values, 0, 2)
    d2_u2 = deriv_values(u2_values, 1, 1)
    d22_u2 = deriv_values(u2_values, 1, 2)
    d12_u2 = deriv_values(d1_u2, 1, 1)
    x1, x2 = grid.mesh()
    t1 = x1 - d1_u1 - lam * d1_u2
    t2 = x2 - d2_u2
    g_at_t = pair.g_poly(np.mod(t1, 1.0), np.mod(t2, 1.0))
    det = ((1.0 - d11_u1 - lam * d11_u2) * (1.0 - d22_u2)
           - lam * d12_u2 * d12_u2)
    return pair.f_values - g_at_t * det


def decomposed_residual(t, u1, u2, pair, schedule=None, eps=0.0):
    """Residual of the decomposed potential u1(x1) + lambda_t * u2(x1,x2).

    For t > 0 this is exactly ``monge_ampere_residual`` at the assembled
    potential (same code path, bitwise).  At t = 0 it is the smooth limit

        f - g(x1 - u1', x2 - d2 u2) (1 - d11 u1)(1 - d22 u2).

    ``u1`` is a 1D array of n1 samples; ``u2`` a ScalarField.
    """
    schedule = schedule or CostSchedule.linear()
    u1 = np.asarray(u1, float)
    grid = u2.grid
    check_admissible(t, u1, u2.values, schedule, eps)
    if t != 0.0:
        cost = schedule.matrix(t)
        combined = u1[:, None] + schedule.lam(t) * u2.values
        st = residual_state(cost, combined, pair, require_margin=False)
        return ScalarField(grid, st.residual)
    return ScalarField(grid, split_residual_values(0.0, u1, u2.values, pair))


def transport_map(cost, u):
    """T = id - A^{-1} grad(u) as a vector field of map values.

    The x2 displacement is divided by a22; requires a positive margin
    (raises ``ConcavityError("not a diffeomorphism ...")`` otherwise).
    """
    margin = c_concavity_margin(cost, u)
    if margin <= 0.0:
        raise ConcavityError(
            f"not a diffeomorphism: margin = {margin:.3g} <= 0")
    g1, g2 = gradient_values(u.values)
    x1, x2 = u.grid.mesh()
    t1 = x1 - g1
    t2 = x2 - g2 / cost.a22
    return VectorField(ScalarField(u.grid, t1), ScalarField(u.grid, t2))


def pushforward_residual(tmap, pair, K):
    """max over |k|_inf <= K of |int exp(-2i pi k.T(x)) f(x) dx - ghat(k)|.

    The quadrature is the grid trapezoid rule; ghat comes from g's closed
    form.  This is the quantitative certificate that T pushes f onto g.
    """
    f = pair.f_values
    t1 = tmap.v1.values
    t2 = tmap.v2.values
    n = f.size
    ks = np.arange(-K, K + 1)
    e1 = {k: np.exp(-2j * np.pi * k * t1) for k in ks}
    e2 = {k: np.exp(-2j * np.pi * k * t2) for k in ks}
    worst = 0.0
    for k1 in ks:
        for k2 in ks:
            quad = np.sum(e1[k1] * e2[k2] * f) / n
            exact = pair.g_poly.fourier_coefficient(k1, k2)
            worst = max(worst, abs(quad - exact))
    return float(worst)
