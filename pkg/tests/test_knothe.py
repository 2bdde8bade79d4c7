import numpy as np
import pytest

import tot
from tot.grid import deriv_values
from tot.trig import TrigPoly1D


def test_marginal_and_conditionals_uniform(grid64):
    f = tot.density_field(tot.CATALOG["uniform"], grid64)
    marginal, fiber = tot.marginal_and_conditionals(f)
    assert np.max(np.abs(marginal.values - 1.0)) < 1e-14
    assert np.max(np.abs(fiber(0.37).values - 1.0)) < 1e-14


def test_marginal_and_conditionals_product(grid64):
    f = tot.density_field(tot.CATALOG["product_f"], grid64)
    marginal, fiber = tot.marginal_and_conditionals(f)
    x = grid64.nodes1()
    assert np.max(np.abs(marginal.values - (1.0 + 0.2 * np.cos(2 * np.pi * x)))) < 1e-13
    # every fiber is the second factor, wherever it is sliced
    y = grid64.nodes2()
    expected = 1.0 + 0.15 * np.cos(2 * np.pi * y)
    for x1 in (0.0, 0.31, 0.77):
        assert np.max(np.abs(fiber(x1).values - expected)) < 1e-13


def test_marginal_and_conditionals_shear(grid64):
    spec = tot.spec((1, 1, 0.3, 0.0))
    f = tot.density_field(spec, grid64)
    marginal, fiber = tot.marginal_and_conditionals(f)
    assert np.max(np.abs(marginal.values - 1.0)) < 1e-13
    x1 = 0.21
    y = grid64.nodes2()
    expected = 1.0 + 0.3 * np.cos(2 * np.pi * (x1 + y))
    assert np.max(np.abs(fiber(x1).values - expected)) < 1e-13


def test_rearrangement_identity(grid64):
    pair = tot.make_density_pair(tot.CATALOG["standard_f"],
                                 tot.CATALOG["standard_f"], grid64)
    sol = tot.knothe_solution(pair)
    assert np.max(np.abs(sol.r1.displacement)) < 1e-12
    assert np.max(np.abs(sol.r2_displacement)) < 1e-11
    assert np.max(np.abs(sol.potentials.u1)) < 1e-12
    assert np.max(np.abs(sol.potentials.u2.values)) < 1e-12


def test_rearrangement_product_structure(grid64):
    pair = tot.product_pair(grid64)
    sol = tot.knothe_solution(pair)
    # R1 is the 1D transport between the first factors
    f1 = tot.circle_density(closed_form=TrigPoly1D.from_modes([(1, 0.2, 0.0)]),
                            m=grid64.n1)
    g1 = tot.circle_density(closed_form=TrigPoly1D.from_modes([(1, 0.15, 0.0)]),
                            m=grid64.n1)
    direct = tot.monotone_circle_map(f1, g1)
    assert np.max(np.abs(sol.r1.displacement - direct.displacement)) < 1e-12
    # fibers do not depend on x1
    assert np.max(np.ptp(sol.r2_displacement, axis=0)) < 1e-12
    assert np.max(np.ptp(sol.potentials.u2.values, axis=0)) < 1e-12


def test_rearrangement_pushforward_fourier():
    grid = tot.build_grid(256, 256)
    g_spec = tot.spec((1, 0, 0.25, 0.0), (1, 1, 0.03125, 0.0),
                      (1, -1, 0.03125, 0.0))
    pair = tot.make_density_pair(tot.CATALOG["uniform"], g_spec, grid)
    sol = tot.knothe_solution(pair)
    assert tot.pushforward_residual(sol.map_field(), pair, 4) < 1e-6


def test_potentials_recover_rearrangement(knothe64):
    sol = knothe64
    d1 = deriv_values(sol.potentials.u1, 0, 1)
    assert np.max(np.abs(d1 - sol.r1.displacement)) < 1e-9
    d2 = deriv_values(sol.potentials.u2.values, 1, 1)
    assert np.max(np.abs(d2 - sol.r2_displacement)) < 1e-9
    m1, m2 = sol.potentials.margins
    assert m1 > 0.0 and m2 > 0.0


def test_marginal_pushforward_quantiles(pair64, knothe64):
    f1, _ = tot.marginal_and_conditionals(pair64.f)
    g1, _ = tot.marginal_and_conditionals(pair64.g)
    assert tot.pushforward_quantile_error(f1, g1, knothe64.r1) < 1e-10


def test_fiber_pushforward_quantiles(pair64, knothe64):
    assert tot.fiber_pushforward_error(pair64, knothe64, n_fibers=8) < 1e-9


def test_triangular_structure(knothe64):
    field = knothe64.map_field()
    assert np.max(np.ptp(field.v1.values, axis=1)) == 0.0


def test_u2_spectral_decay_in_x1(knothe128):
    # combined bandwidth of the standard pair: max total degree of f's
    # modes (2) plus g's (2); coefficients must be below 1e-8 from mode 12
    u2 = knothe128.potentials.u2.values
    coeffs = np.abs(np.fft.fft(u2, axis=0)).max(axis=1) / u2.shape[0]
    bandwidth = 4
    assert np.max(coeffs[3 * bandwidth: u2.shape[0] // 2]) < 1e-8


def test_l2_map_distance_examples(grid64):
    x1, x2 = grid64.mesh()
    ones = tot.field(grid64, np.ones(grid64.shape))
    t = tot.VectorField(tot.field(grid64, x1 + 0 * x2),
                        tot.field(grid64, x2 + 0 * x1))
    assert tot.l2_map_distance(t, t, ones) == 0.0
    shifted = tot.VectorField(t.v1, tot.field(grid64, t.v2.values + 0.5))
    assert abs(tot.l2_map_distance(t, shifted, ones) - 0.5) < 1e-14


def test_requires_closed_form(grid64):
    f = tot.field(grid64, np.ones(grid64.shape))
    with pytest.raises(ValueError, match="closed-form"):
        tot.marginal_and_conditionals(f)
