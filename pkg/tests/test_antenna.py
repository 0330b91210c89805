import math

import numpy as np
import pytest

from uavrrm.antenna import (ARRAY_GAIN_FLOOR_DB, array_gain,
                            beamforming_vector, bs_frame_angles, element_gain,
                            steering_vector, to_linear, total_gain_db,
                            wrap_deg)
from uavrrm.config import ArrayConfig, ElementPattern


@pytest.fixture
def pat():
    return ElementPattern()


@pytest.fixture
def arr():
    return ArrayConfig(boresight_az_deg=(0.0,))


def test_element_gain_peak(pat):
    assert element_gain(pat, 90.0, 0.0) == pytest.approx(-8.0)


def test_element_gain_3db_points(pat):
    # half the 3 dB beamwidth off boresight costs exactly 3 dB
    assert element_gain(pat, 90.0 + 32.5, 0.0) == pytest.approx(-11.0)
    assert element_gain(pat, 90.0, 45.0) == pytest.approx(-11.0)


def test_element_gain_backlobe_clamped(pat):
    # total attenuation is clamped at a_m_db
    assert element_gain(pat, 0.0, 180.0) == pytest.approx(-8.0 - 30.0)


def test_element_gain_floor_everywhere(pat):
    for theta in np.arange(0.0, 180.5, 5.0):
        for phi in np.arange(-180.0, 180.0, 5.0):
            g = element_gain(pat, float(theta), float(phi))
            assert -8.0 - 30.0 - 1e-12 <= g <= -8.0 + 1e-12


def test_to_linear_examples():
    assert to_linear(0.0) == pytest.approx(1.0)
    assert to_linear(-30.0) == pytest.approx(1e-3)
    # element peak plus full coherent 4x4 array gain
    assert to_linear(-8.0 + 10 * math.log10(16)) == pytest.approx(2.535, abs=1e-3)


def test_steering_vector_unit_modulus(arr, rng):
    for _ in range(20):
        theta = rng.uniform(0, 180)
        phi = rng.uniform(-180, 180)
        v = steering_vector(arr, theta, phi)
        assert v.shape == (16,)
        assert np.allclose(np.abs(v), 1.0, atol=1e-12)


def test_beamforming_vector_modulus_and_shape(arr):
    w = beamforming_vector(arr, 10.0)
    assert w.shape == (16,)
    assert np.allclose(np.abs(w), 0.25, atol=1e-12)
    wm = beamforming_vector(arr, np.array([0.0, 10.0, 20.0]))
    assert wm.shape == (16, 3)
    assert np.allclose(wm[:, 1], w, atol=1e-12)


def test_array_gain_upper_bound(arr, rng):
    bound = 10 * math.log10(16)
    for _ in range(200):
        g = array_gain(arr, rng.uniform(0, 180), rng.uniform(-180, 180),
                       rng.uniform(-180, 180))
        assert g <= bound + 1e-9


def test_matched_direction_coherent_gain():
    # with tilt t, a wave at zenith 90 - t and azimuth phi is matched by
    # scan angle -phi (sign conventions cancel)
    arr = ArrayConfig(tilt_deg=15.0, boresight_az_deg=(0.0,))
    g = array_gain(arr, 90.0 - 15.0, 25.0, -25.0)
    assert g == pytest.approx(10 * math.log10(16), abs=1e-9)


def test_array_gain_floor_is_finite(arr):
    gains = array_gain(arr, 90.0, 0.0, np.linspace(-180, 180, 2000))
    assert np.all(np.isfinite(gains))
    assert np.all(gains >= ARRAY_GAIN_FLOOR_DB)


def test_total_gain_is_sum(pat, arr):
    theta, phi, scan = 80.0, 30.0, 10.0
    assert total_gain_db(pat, arr, theta, phi, scan) == pytest.approx(
        element_gain(pat, theta, phi) + array_gain(arr, theta, phi, scan))


def test_array_gain_scan_continuity(arr):
    # smoothness smoke test away from nulls
    scans = np.linspace(-30.0, 30.0, 6001)
    g = array_gain(arr, 75.0, 5.0, scans)
    step = scans[1] - scans[0]
    diffs = np.abs(np.diff(g))
    away_from_null = (g[:-1] > -20.0) & (g[1:] > -20.0)
    assert np.max(diffs[away_from_null]) <= 100.0 * step


def test_wrap_deg():
    assert wrap_deg(190.0) == pytest.approx(-170.0)
    assert wrap_deg(-181.0) == pytest.approx(179.0)
    assert wrap_deg(0.0) == 0.0
    assert wrap_deg(370.0, lo=0.0) == pytest.approx(10.0)


def test_bs_frame_angles_reversal():
    # arrival at the UAV from straight below maps to departure straight up
    theta, phi = bs_frame_angles(180.0, 45.0, boresight_deg=45.0)
    assert theta == pytest.approx(0.0)
    assert phi == pytest.approx(-180.0)


def test_bs_frame_boresight_alignment():
    # a UAV in the boresight direction sits at local azimuth 0
    theta, phi = bs_frame_angles(120.0, 10.0, boresight_deg=190.0)
    assert phi == pytest.approx(0.0)
    assert theta == pytest.approx(60.0)
