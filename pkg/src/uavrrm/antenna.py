"""3GPP-style planar array gain model.

Element pattern plus UPA steering/beamforming inner product. All public
angles are degrees; the horizontal pattern and scan angles live in the BS
local frame whose azimuth origin is the BS boresight (pointing at the
scene origin by default).

The element formula keeps the literal double-negation form of the standard
(G_max - min{-[A_v + A_h], A_m}); the equivalent simplification is
G_max - min{attenuation_sum, A_m} with attenuation_sum = -(A_v + A_h).
"""

import math

import numpy as np

# dB floor returned when the steering/beamforming inner product is exactly
# zero; keeps downstream SINR arithmetic finite.
ARRAY_GAIN_FLOOR_DB = -400.0


def wrap_deg(angle, lo=-180.0):
    """Wrap angle(s) into [lo, lo + 360)."""
    return (angle - lo) % 360.0 + lo


def to_linear(gain_db):
    """dB -> dimensionless power ratio (works on scalars and arrays)."""
    return 10.0 ** (np.asarray(gain_db, dtype=float) / 10.0) \
        if isinstance(gain_db, np.ndarray) else 10.0 ** (float(gain_db) / 10.0)


def element_gain(pat, zenith_deg, azimuth_deg):
    """Single-element gain A_E(theta, phi) in dBi."""
    theta = float(zenith_deg)
    phi = wrap_deg(float(azimuth_deg))
    a_v = -min(12.0 * ((theta - 90.0) / pat.theta_3db_deg) ** 2, pat.sla_v_db)
    a_h = -min(12.0 * (phi / pat.phi_3db_deg) ** 2, pat.a_m_db)
    return pat.g_e_max_dbi - min(-(a_v + a_h), pat.a_m_db)


def _element_indices(cfg):
    # element (u, v) flattened with u (horizontal) major
    u = np.repeat(np.arange(cfg.n_h), cfg.n_v)
    v = np.tile(np.arange(cfg.n_v), cfg.n_h)
    return u, v


def steering_vector(cfg, zenith_deg, azimuth_deg):
    """Unit-modulus steering vector of length n_h * n_v (spacings in wavelengths)."""
    theta = math.radians(zenith_deg)
    phi = math.radians(azimuth_deg)
    u, v = _element_indices(cfg)
    phase = 2.0 * math.pi * (u * cfg.d_h * math.sin(theta) * math.sin(phi)
                             + v * cfg.d_v * math.cos(theta))
    return np.exp(1j * phase)


def beamforming_vector(cfg, scan_deg):
    """Beamforming vector(s) with modulus 1/sqrt(n_h*n_v).

    scan_deg may be a scalar or an array; an array input yields a matrix of
    shape (n_h*n_v, len(scan_deg)).
    """
    scalar = np.ndim(scan_deg) == 0
    scan = np.radians(np.atleast_1d(np.asarray(scan_deg, dtype=float)))
    u, v = _element_indices(cfg)
    tilt = math.radians(cfg.tilt_deg)
    phase = -2.0 * math.pi * (
        np.outer(u * cfg.d_h * math.cos(tilt), np.sin(scan))
        - (v * cfg.d_v * math.sin(tilt))[:, None])
    w = np.exp(1j * phase) / math.sqrt(cfg.n_h * cfg.n_v)
    return w[:, 0] if scalar else w


def array_gain(cfg, zenith_deg, azimuth_deg, scan_deg):
    """Digital beamforming gain 10 log10 |V^H W|^2 in dB.

    Vectorized over scan_deg; scalar in, scalar out.
    """
    vec = steering_vector(cfg, zenith_deg, azimuth_deg)
    w = beamforming_vector(cfg, scan_deg)
    inner = np.tensordot(np.conj(vec), w, axes=(0, 0))
    power = np.abs(inner) ** 2
    scalar = np.ndim(scan_deg) == 0
    power = np.atleast_1d(power)
    out = np.where(power > 0.0, 10.0 * np.log10(np.where(power > 0.0, power, 1.0)),
                   ARRAY_GAIN_FLOOR_DB)
    return float(out[0]) if scalar else out


def total_gain_db(pat, cfg, zenith_deg, azimuth_deg, scan_deg):
    """Total gain: element pattern plus array gain, in dBi."""
    return element_gain(pat, zenith_deg, azimuth_deg) + array_gain(
        cfg, zenith_deg, azimuth_deg, scan_deg)


def bs_frame_angles(zenith_at_uav_deg, azimuth_at_uav_deg, boresight_deg):
    """Map a UAV-side arrival direction into the BS local evaluation frame.

    The departure direction at the BS is the arrival direction reversed:
    zenith flips (180 - theta) and azimuth rotates by 180 deg before the
    boresight rotation into the local frame.
    """
    theta = 180.0 - zenith_at_uav_deg
    phi = wrap_deg(azimuth_at_uav_deg + 180.0 - boresight_deg)
    return theta, phi
