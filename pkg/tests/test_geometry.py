import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdris.geometry import (
    SPEED_OF_LIGHT,
    RisGeometry,
    SphericalPosition,
    assemble_rician,
    draw_channel,
    element_offsets,
    los_alice_ris,
    los_ris_receiver,
    path_loss_amplitude,
    rician_split,
    sample_nlos,
)


def test_single_element_has_no_offset():
    link = element_offsets(RisGeometry(1, 1), SphericalPosition.from_degrees(33, 12, 17.0))
    np.testing.assert_array_equal(link.upsilon, [0.0])
    np.testing.assert_array_equal(link.dists, [17.0])


def test_offsets_along_y():
    geom = RisGeometry(l_y=2, l_z=1, spacing=0.005)
    link = element_offsets(geom, SphericalPosition.from_degrees(90, 0, 10))
    np.testing.assert_allclose(link.upsilon, [0, 0.005], atol=1e-15)
    np.testing.assert_allclose(link.dists, [10, 10.005], atol=1e-12)


def test_offsets_along_z_vanish_at_broadside():
    geom = RisGeometry(l_y=1, l_z=2, spacing=0.005)
    link = element_offsets(geom, SphericalPosition.from_degrees(90, 0, 10))
    np.testing.assert_allclose(link.upsilon, [0, 0], atol=1e-15)


def test_element_order_y_runs_fastest():
    geom = RisGeometry(l_y=3, l_z=2, spacing=1.0)
    # theta = 0 keeps only the z term, so offsets step once per row of 3
    link = element_offsets(geom, SphericalPosition(0.0, 0.0, 5.0))
    np.testing.assert_allclose(link.upsilon, [0, 0, 0, 1, 1, 1])
    np.testing.assert_allclose(link.dists, link.base_dist + link.upsilon)


def test_default_spacing_is_half_wavelength():
    geom = RisGeometry(2, 2, f_c=28e9)
    assert geom.spacing == pytest.approx(SPEED_OF_LIGHT / 56e9, rel=1e-15)


@pytest.mark.parametrize("kwargs", [dict(l_y=0, l_z=1), dict(l_y=1, l_z=1, f_c=0.0), dict(l_y=1, l_z=1, g=0),
                                    dict(l_y=1, l_z=1, a0=0.0), dict(l_y=1, l_z=1, spacing=-1.0)])
def test_geometry_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        RisGeometry(**kwargs)


def test_position_rejects_non_positive_distance():
    with pytest.raises(ValueError):
        SphericalPosition(0.1, 0.2, 0.0)


def test_path_loss_table_values():
    assert 20 * np.log10(path_loss_amplitude(1.0)) == pytest.approx(-45.0, abs=1e-12)
    assert path_loss_amplitude(1.0) == pytest.approx(5.6234e-3, rel=1e-4)
    assert 20 * np.log10(path_loss_amplitude(100.0)) == pytest.approx(-85.0, abs=1e-12)
    ratio_db = 20 * np.log10(path_loss_amplitude(10.0) / path_loss_amplitude(1.0))
    assert ratio_db == pytest.approx(-20.0, abs=1e-12)
    with pytest.raises(ValueError):
        path_loss_amplitude(0.0)


def test_rician_split_is_unit_power():
    b1, b2 = rician_split(10 ** 1.5)
    assert b1**2 + b2**2 == pytest.approx(1.0, abs=1e-15)
    assert b1 == pytest.approx(np.sqrt(31.6227766 / 32.6227766), rel=1e-8)


def test_los_alice_ris_basic():
    geom = RisGeometry(l_y=2, l_z=1, f_c=28e9)
    h = los_alice_ris(geom, SphericalPosition.from_degrees(90, 0, 10))
    np.testing.assert_allclose(h, [1, -1], atol=1e-12)
    assert los_alice_ris(RisGeometry(1, 1), SphericalPosition(0.3, 0.1, 9.0))[0] == 1


def test_los_receiver_full_period_gives_ones():
    geom = RisGeometry(l_y=1, l_z=3, f_c=28e9)
    link = element_offsets(geom, SphericalPosition(np.pi / 2, 0.0, 30.0))  # upsilon = 0
    freqs = np.array([1, 2, 3]) * SPEED_OF_LIGHT / 30.0
    np.testing.assert_allclose(los_ris_receiver(geom, link, freqs), np.ones(3), atol=1e-9)


def test_los_receiver_entrywise_dependence():
    geom = RisGeometry(3, 3)
    link = element_offsets(geom, SphericalPosition.from_degrees(110, 25, 20))
    f = np.linspace(10e6, 30e6, 9)
    base = los_ris_receiver(geom, link, f)
    f2 = f.copy()
    f2[4] += 1.7e6
    moved = los_ris_receiver(geom, link, f2)
    changed = np.flatnonzero(~np.isclose(base, moved, rtol=0, atol=1e-14))
    np.testing.assert_array_equal(changed, [4])
    with pytest.raises(ValueError):
        los_ris_receiver(geom, link, f[:3])


@settings(max_examples=30, deadline=None)
@given(theta=st.floats(0, np.pi), phi=st.floats(0, np.pi), dist=st.floats(1, 500),
       fmax=st.floats(1e6, 1e8))
def test_los_vectors_unit_modulus(theta, phi, dist, fmax):
    geom = RisGeometry(4, 3)
    pos = SphericalPosition(theta, phi, dist)
    f = np.linspace(0, fmax, geom.n_elements)
    np.testing.assert_allclose(np.abs(los_alice_ris(geom, pos)), 1.0, atol=1e-14)
    np.testing.assert_allclose(np.abs(los_ris_receiver(geom, element_offsets(geom, pos), f)), 1.0, atol=1e-14)


def test_assemble_rician_limits_and_linearity():
    rng = np.random.default_rng(1)
    los, nlos, nlos2 = (sample_nlos(rng, 5) for _ in range(3))
    np.testing.assert_array_equal(assemble_rician(0.3, 1.0, 0.0, los, nlos), 0.3 * los)
    np.testing.assert_allclose(assemble_rician(0.3, 0.8, 0.6, los, 0 * nlos), 0.3 * 0.8 * los)
    lhs = assemble_rician(0.3, 0.8, 0.6, los, nlos + 2 * nlos2)
    rhs = assemble_rician(0.3, 0.8, 0.6, los, nlos) + 2 * assemble_rician(0.3, 0.0, 0.6, los, nlos2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-15)
    with pytest.raises(ValueError):
        assemble_rician(1.0, 0.5, 0.5, los, nlos[:2])


def test_assemble_rician_mean_monte_carlo():
    rng = np.random.default_rng(2)
    los = np.exp(1j * np.linspace(0, 2, 4))
    draws = assemble_rician(0.5, 0.9, np.sqrt(0.19), los, sample_nlos(rng, 4, size=100_000))
    mean = draws.mean(axis=0)
    se = 0.5 * np.sqrt(0.19) / np.sqrt(100_000)
    assert np.all(np.abs(mean - 0.5 * 0.9 * los) <= 3 * np.sqrt(2) * se)


def test_sample_nlos_moments_and_determinism():
    np.testing.assert_array_equal(sample_nlos(5, 8), sample_nlos(5, 8))
    x = sample_nlos(11, 1, size=1_000_000).ravel()
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.01)
    se = 1 / np.sqrt(2 * x.size)
    assert abs(x.real.mean()) < 3 * se and abs(x.imag.mean()) < 3 * se
    assert np.var(x.real) == pytest.approx(0.5, rel=0.01)


def test_draw_channel_is_seeded_and_consistent(small_setup):
    geom, alice, bob, willies, chan = small_setup
    again = draw_channel(geom, alice, bob, willies, 10 ** 1.5, np.random.default_rng(7))
    np.testing.assert_array_equal(chan.h_ar, again.h_ar)
    np.testing.assert_array_equal(chan.rb_nlos, again.rb_nlos)
    f = np.full(9, 2e7)
    expect = chan.rho_rb * (chan.beta1 * los_ris_receiver(geom, chan.rb_geom, f) + chan.beta2 * chan.rb_nlos)
    np.testing.assert_allclose(chan.h_rb(f), expect, atol=1e-18)
    assert chan.n_wardens == 2
    # h_ar does not depend on modulation frequencies at all
    assert chan.h_ar.shape == (9,)
