"""Shared fixtures and field generators for the test suite.

Heavy artifacts (Knothe solutions, continuation runs, the 256^2 state)
are session-scoped so that the module suites and the acceptance suite
share one computation.
"""

import numpy as np
import pytest

import tot
from tot.monge_ampere import hessian_values


def band_limited(grid, kmax, rng, include_x1_only=True):
    """Random zero-mean trigonometric polynomial with |k|_inf <= kmax."""
    x1, x2 = grid.mesh()
    v = np.zeros(grid.shape)
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(0, kmax + 1):
            if k2 == 0 and (k1 <= 0 or not include_x1_only):
                continue
            phase = 2.0 * np.pi * (k1 * x1 + k2 * x2)
            v += rng.normal() * np.cos(phase) + rng.normal() * np.sin(phase)
    return v - v.mean()


def admissible_potential(grid, kmax, rng, margin_target=0.3, a22=1.0):
    """Random potential scaled so that A - D^2(u) keeps a safe margin."""
    v = band_limited(grid, kmax, rng)
    h11, h12, h22 = hessian_values(v)
    bound = max(np.max(np.abs(h11)) + np.max(np.abs(h12)),
                (np.max(np.abs(h22)) + np.max(np.abs(h12))) / a22)
    return (1.0 - margin_target) * min(1.0, a22) * v / bound


@pytest.fixture(scope="session")
def grid64():
    return tot.build_grid(64, 64)


@pytest.fixture(scope="session")
def grid128():
    return tot.build_grid(128, 128)


@pytest.fixture(scope="session")
def pair64(grid64):
    return tot.standard_pair(grid64)


@pytest.fixture(scope="session")
def pair128(grid128):
    return tot.standard_pair(grid128)


@pytest.fixture(scope="session")
def product128(grid128):
    return tot.product_pair(grid128)


@pytest.fixture(scope="session")
def uniform_pair64(grid64):
    return tot.make_density_pair(tot.CATALOG["uniform"], tot.CATALOG["uniform"],
                                 grid64)


@pytest.fixture(scope="session")
def knothe64(pair64):
    return tot.knothe_solution(pair64)


@pytest.fixture(scope="session")
def knothe128(pair128):
    return tot.knothe_solution(pair128)


@pytest.fixture(scope="session")
def knothe_product128(product128):
    return tot.knothe_solution(product128)


@pytest.fixture(scope="session")
def cold_newton128(pair128, grid128):
    return tot.newton_correct(tot.identity_cost(), tot.zero_field(grid128),
                              pair128, tol=1e-10)


@pytest.fixture(scope="session")
def traj32(pair128):
    return tot.run(pair128)


@pytest.fixture(scope="session")
def traj_product32(product128):
    return tot.run(product128)


@pytest.fixture(scope="session")
def traj64(pair128):
    return tot.run(pair128, options=tot.ContinuationOptions(steps=64))


@pytest.fixture(scope="session")
def grid256():
    return tot.build_grid(256, 256)


@pytest.fixture(scope="session")
def pair256(grid256):
    return tot.standard_pair(grid256)


@pytest.fixture(scope="session")
def knothe256(pair256):
    return tot.knothe_solution(pair256)


@pytest.fixture(scope="session")
def traj256_short(pair256):
    return tot.run(pair256, options=tot.ContinuationOptions(steps=8))
