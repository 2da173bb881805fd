import numpy as np
import pytest
from hypothesis import given, strategies as st

from tachyon.analytic import eigenspinor
from tachyon.core import (
    ObservableSeries,
    SpinorField,
    gaussian_packet,
    make_grid,
    observables,
    positive_energy_packet,
)
from tachyon.errors import (
    ConfigurationError,
    DegenerateStateError,
    DomainTooSmallError,
    IllConditionedPacketError,
)
from tachyon.params import DiracParams, NaturalUnits

finite = st.floats(-5, 5, allow_nan=False)


def test_grid_spacing():
    g = make_grid(1024, 40)
    assert g.dx == pytest.approx(0.0390625)
    assert g.p_max == pytest.approx(80.42477, rel=1e-6)
    g = make_grid(16, 16)
    assert g.dx == 1.0
    assert g.dp == pytest.approx(0.3927, abs=1e-4)
    assert g.x[g.n_points // 2] == 0.0


@pytest.mark.parametrize("n, L", [(1000, 40), (8, 10), (64, 0.0), (64, -1.0)])
def test_grid_rejects(n, L):
    with pytest.raises(ConfigurationError):
        make_grid(n, L)


def test_momentum_grid_is_fourier_dual():
    g = make_grid(64, 10)
    k = 5
    wave = np.exp(1j * g.p[k] * g.x)
    power = g.to_momentum(wave)
    assert np.argmax(np.abs(power)) == k
    assert np.allclose(np.delete(power, k), 0, atol=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_fourier_round_trip(seed):
    g = make_grid(256, 20)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(2, 256)) + 1j * rng.normal(size=(2, 256))
    back = g.to_position(g.to_momentum(psi))
    assert np.max(np.abs(back - psi)) / np.max(np.abs(psi)) <= 1e-13


def test_natural_units_round_trip():
    u = NaturalUnits(3.4e-9, 15.9e-6)
    x = np.array([0.1, 2.5, -3.0])
    assert np.allclose(u.length_from_si(u.length_to_si(x)), x, rtol=1e-15)
    assert np.allclose(u.time_from_si(u.time_to_si(x)), x, rtol=1e-15)
    assert u.speed_of_light == pytest.approx(3.4e-9 / 15.9e-6)


def test_gaussian_packet_moments(grid, tachyon_2):
    f = gaussian_packet(grid, 3.5, 1.0, eigenspinor(3.5, tachyon_2, +1))
    rec = observables(f)
    assert f.norm_sq == pytest.approx(1.0, abs=1e-12)
    assert abs(rec.mean_x) < 1e-10
    assert rec.mean_p == pytest.approx(3.5, abs=1e-6)


def test_gaussian_momentum_against_quadrature(grid):
    # <p> of |exp(-(p-p_o)^2 w^2 * 2)|: analytic mean p_o for the Gaussian envelope
    f = gaussian_packet(grid, -1.25, 0.7, [1, 0])
    p = np.linspace(-20, 20, 40001)
    w = np.exp(-2 * 0.7**2 * (p + 1.25) ** 2)
    assert observables(f).mean_p == pytest.approx(np.sum(p * w) / np.sum(w), abs=1e-9)


def test_product_state_has_no_correlation(grid):
    rec = observables(gaussian_packet(grid, 0.0, 1.0, [1, 0]))
    assert rec.mean_sigma_z == pytest.approx(1.0)
    assert rec.correlation_xz == pytest.approx(0.0, abs=1e-14)


def test_sigma_x_eigenstate(grid):
    s = np.array([1, -1]) / np.sqrt(2)
    rec = observables(gaussian_packet(grid, 2.0, 1.5, s))
    assert rec.mean_sigma_x == pytest.approx(-1.0, abs=1e-14)


def test_clipped_packet_rejected():
    with pytest.raises(DomainTooSmallError):
        gaussian_packet(make_grid(256, 10), 0.0, 1.0, [1, 0])


def test_unnormalised_spinor_rejected(grid):
    with pytest.raises(ConfigurationError):
        gaussian_packet(grid, 0.0, 1.0, [1, 1])


def test_positive_packet_correlations(grid):
    tach = positive_energy_packet(grid, 10.0, 1.0, DiracParams(1.0, "tachyon"))
    norm = positive_energy_packet(grid, 10.0, 1.0, DiracParams(1.0, "normal"))
    assert observables(tach).correlation_xz == pytest.approx(-0.005, rel=0.05)
    assert abs(observables(norm).correlation_xz) < 1e-6
    assert tach.norm_sq == pytest.approx(1.0, abs=1e-12)


def test_correlation_matches_direct_sum(grid):
    f = positive_energy_packet(grid, 10.0, 1.0, DiracParams(1.0, "tachyon"))
    up, down = np.abs(f.up) ** 2, np.abs(f.down) ** 2
    w = (up + down).sum()
    direct = (grid.x * (up - down)).sum() / w - (grid.x * (up + down)).sum() * (up - down).sum() / w**2
    assert observables(f).correlation_xz == pytest.approx(direct, rel=1e-12)


def test_lower_component_leads(grid):
    f = positive_energy_packet(
        grid, 3.5, 1.0, DiracParams(2.0, "tachyon"), max_excluded_weight=1e-2, boundary_tol=1e-3
    )
    assert grid.x[np.argmax(np.abs(f.down))] > grid.x[np.argmax(np.abs(f.up))]


def test_band_weight_guard(grid):
    with pytest.raises(IllConditionedPacketError):
        positive_energy_packet(grid, 3.5, 1.0, DiracParams(2.0, "tachyon"))


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_renormalisation_invariance(factor):
    g = make_grid(256, 20)
    f = positive_energy_packet(g, 4.0, 1.0, DiracParams(0.5, "tachyon"))
    a, b = observables(f), observables(f.scaled(factor))
    for name in ("mean_x", "mean_p", "mean_sigma_x", "mean_sigma_y", "mean_sigma_z", "correlation_xz"):
        assert getattr(b, name) == pytest.approx(getattr(a, name), rel=1e-9, abs=1e-12)
    assert b.norm_sq == pytest.approx(abs(factor) ** 2 * a.norm_sq, rel=1e-12)


def test_half_amplitude_quarters_norm(grid):
    f = gaussian_packet(grid, 1.0, 1.0, [0.6, 0.8])
    assert observables(f.scaled(0.5)).norm_sq == pytest.approx(0.25)


@given(finite, st.floats(0.5, 2.0), st.floats(0, 2 * np.pi))
def test_builder_normalisation_and_bounds(p_o, width, angle):
    g = make_grid(512, 40)
    f = gaussian_packet(g, p_o, width, [np.cos(angle), 1j * np.sin(angle)])
    rec = observables(f)
    assert rec.norm_sq == pytest.approx(1.0, abs=1e-12)
    for s in (rec.mean_sigma_x, rec.mean_sigma_y, rec.mean_sigma_z):
        assert abs(s) <= 1 + 1e-12


def test_zero_field_rejected(grid):
    with pytest.raises(DegenerateStateError):
        observables(SpinorField(grid, np.zeros((2, grid.n_points))))


def test_fields_are_immutable(grid):
    f = gaussian_packet(grid, 0.0, 1.0, [1, 0])
    with pytest.raises(ValueError):
        f.psi[0, 0] = 1.0
    observables(f)
    assert f.norm_sq == pytest.approx(1.0)


def test_series_window_and_indexing(separable_run):
    s = separable_run.series
    w = s.window(0.5, 1.0)
    assert w.time[0] == pytest.approx(0.5) and w.time[-1] == pytest.approx(1.0)
    assert isinstance(s, ObservableSeries) and s[0].time == 0.0


@pytest.mark.parametrize("kwargs", [dict(mass=-1.0), dict(mass=float("nan")), dict(mass=1.0, mass_type="imaginary")])
def test_dirac_params_validation(kwargs):
    with pytest.raises(ConfigurationError):
        DiracParams(**kwargs)


def test_mass_term_selection():
    assert DiracParams(2.0).mass_coefficient == 2.0
    assert DiracParams(2.0, "tachyon").mass_coefficient == -2.0j
    assert DiracParams(2.0, "tachyon").with_(mass_type="normal") == DiracParams(2.0)
