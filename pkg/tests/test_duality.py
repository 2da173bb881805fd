import math

import numpy as np
import pytest

from tachyon.core import positive_energy_packet, make_grid
from tachyon.duality import (
    U,
    U_INV,
    SpacetimeSolution,
    dual_transform,
    equation_residual,
    evolved_lattice,
    plane_wave_lattice,
    residual_convergence,
    swap_spacetime,
)
from tachyon.errors import ConfigurationError, ResolutionError
from tachyon.params import DiracParams


def test_u_is_unitary():
    assert np.allclose(U @ U_INV, np.eye(2))
    sx = np.array([[0, 1], [1, 0]])
    assert np.allclose(U @ U, 1j * sx)


def test_plane_wave_dual():
    src = plane_wave_lattice(3.0, DiracParams(4.0), 64)
    assert src.periodic_t and src.periodic_x
    dual = dual_transform(src)
    assert equation_residual(src) < 1e-11
    assert equation_residual(dual) < 1e-11
    assert dual.params.is_tachyon


def test_plane_wave_dual_fails_as_normal():
    dual = dual_transform(plane_wave_lattice(3.0, DiracParams(4.0), 64))
    wrong = SpacetimeSolution(dual.values, dual.t, dual.x, DiracParams(4.0), dual.phi, dual.A, True, True)
    assert equation_residual(wrong) > 1.0


def test_potential_mapping():
    src = plane_wave_lattice(3.0, DiracParams(4.0), 16)
    g = 2.0
    phi = g * np.broadcast_to(src.x, (16, 16))
    tagged = SpacetimeSolution(src.values, src.t, src.x, src.params.with_(potential_slope=g), phi, 0.0)
    dual = dual_transform(tagged)
    assert np.allclose(dual.A, -g * dual.t[:, None] * np.ones(16))
    assert np.allclose(dual.phi, 0.0)


def test_random_field_is_not_a_solution():
    rng = np.random.default_rng(0)
    n = 32
    vals = rng.normal(size=(n, 2, n)) + 1j * rng.normal(size=(n, 2, n))
    axis = np.linspace(0, 1, n, endpoint=False)
    sol = SpacetimeSolution(vals, axis, axis, DiracParams(1.0), 0.0, 0.0)
    assert equation_residual(sol) > 1.0
    assert equation_residual(dual_transform(sol)) > 1.0


def test_double_swap_is_global_unitary():
    src = plane_wave_lattice(3.0, DiracParams(4.0), 16)
    twice = swap_spacetime(swap_spacetime(src))
    sx = np.array([[0, 1], [1, 0]])
    expected = np.einsum("ij,tjx->tix", -1j * sx, src.values)
    assert np.max(np.abs(twice.values - expected)) < 1e-14
    assert twice.periodic_t == src.periodic_t


def test_non_square_rejected():
    axis_t = np.linspace(0, 1, 8)
    axis_x = np.linspace(0, 1, 16)
    sol = SpacetimeSolution(np.zeros((8, 2, 16)), axis_t, axis_x, DiracParams(1.0), 0.0, 0.0)
    with pytest.raises(ConfigurationError):
        dual_transform(sol)
    with pytest.raises(ConfigurationError):
        dual_transform(plane_wave_lattice(3.0, DiracParams(4.0, "tachyon"), 16))
    with pytest.raises(ConfigurationError):
        SpacetimeSolution(np.zeros((8, 2, 9)), axis_t, axis_t, DiracParams(1.0), 0.0, 0.0)


def _linear_lattices(levels=(64, 128, 256)):
    params = DiracParams(1.0, potential_slope=2.0)
    out = []
    for n in levels:
        h = 4.0 / n
        grid = make_grid(int(round(32.0 / h)), 32.0)
        f = positive_energy_packet(grid, 3.0, 1.0, params, x0=-2.0)
        out.append(evolved_lattice(f, params, n, x_start=-4.0))
    return out


@pytest.fixture(scope="module")
def linear_lattices():
    return _linear_lattices()


def test_linear_potential_convergence(linear_lattices):
    duals = [dual_transform(s) for s in linear_lattices]
    for s, d in zip(linear_lattices, duals):
        assert equation_residual(d) < 10 * equation_residual(s)
    for sols in (linear_lattices, duals):
        rep = residual_convergence(sols)
        assert np.all(rep.orders > 3.5)


def test_convergence_guard(linear_lattices):
    with pytest.raises(ResolutionError):
        residual_convergence(linear_lattices[:2], min_order=6.0)
    with pytest.raises(ConfigurationError):
        residual_convergence(linear_lattices[:1])


def test_full_grid_lattice_is_periodic_in_x():
    params = DiracParams(1.0)
    grid = make_grid(64, 20.0)
    f = positive_energy_packet(grid, 1.0, 1.0, params, boundary_tol=1e-8)
    sol = evolved_lattice(f, params, 64)
    assert sol.periodic_x and not sol.periodic_t
    assert sol.is_square and sol.dt == pytest.approx(grid.dx)
    with pytest.raises(ConfigurationError):
        evolved_lattice(f, params, 32)
