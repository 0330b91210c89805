"""Parametric channel twin: scenario sampling, multipath synthesis, dataset IO.

Stands in for a ray-traced channel generator while keeping the same output
schema: per (UAV, BS, beam) aggregate linear power gain plus mean azimuth /
zenith angles of arrival at the UAV.

Conventions: zenith is measured from the +z axis at the receiver (a UAV
directly above a BS sees the LOS arrive at 180 deg), azimuth from +x
counterclockwise, both in degrees. Tensors are stored as little-endian
float32 so that dataset round-trips are bit-exact.
"""

from dataclasses import dataclass
import math
import struct

import numpy as np

from .config import SceneConfig
from .errors import DatasetFormatError, GeometryError

DATASET_MAGIC = b"AERRM1"

# Multipath synthesis knobs (see README for the modeling rationale):
# each NLOS component carries LOS power attenuated by 6..20 dB, angles are
# jittered +-15 deg around the LOS direction, and the LOS path itself is
# suppressed with an altitude-dependent probability.
NLOS_COUNT_MAX = 4
NLOS_EXCESS_DB = (6.0, 20.0)
AOA_JITTER_DEG = 15.0


def los_blockage_probability(altitude_m):
    return max(0.0, 0.3 - altitude_m / 1000.0)


@dataclass(frozen=True)
class PathComponent:
    """One multipath component arriving at a UAV."""

    amplitude: complex
    azimuth_deg: float
    zenith_deg: float
    delay_index: int


@dataclass(frozen=True)
class ChannelTensor:
    """Aggregate gain and mean AoAs for every (UAV, BS, beam) link."""

    gain: np.ndarray      # (M, L, N) linear power gain, float32
    azimuth: np.ndarray   # (M, L, N) degrees in [0, 360)
    zenith: np.ndarray    # (M, L, N) degrees in [0, 180]

    def __post_init__(self):
        if not (self.gain.shape == self.azimuth.shape == self.zenith.shape):
            raise DatasetFormatError("channel tensor blocks disagree in shape")
        if self.gain.ndim != 3:
            raise DatasetFormatError("channel tensor must be M x L x N")
        if not np.all(np.isfinite(self.gain)) or np.any(self.gain < 0):
            raise DatasetFormatError("gains must be finite and nonnegative")

    @property
    def shape(self):
        return self.gain.shape


@dataclass(frozen=True)
class Scenario:
    """One snapshot: UAV positions plus the synthesized channel tensor."""

    uav_positions: np.ndarray  # (M, 3) meters, float32
    channel: ChannelTensor


def los_geometry(uav_pos, bs_pos):
    """Distance and (zenith, azimuth) of the LOS arrival at the UAV."""
    dx = bs_pos[0] - uav_pos[0]
    dy = bs_pos[1] - uav_pos[1]
    dz = bs_pos[2] - uav_pos[2]
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist == 0.0:
        raise GeometryError("UAV and BS positions coincide")
    zenith = math.degrees(math.acos(max(-1.0, min(1.0, dz / dist))))
    azimuth = math.degrees(math.atan2(dy, dx)) % 360.0
    return dist, zenith, azimuth


def synthesize_paths(uav_pos, bs_pos, wavelength_m, rng):
    """Draw the multipath list for one link.

    LOS amplitude follows free space (lambda / 4 pi d) with a deterministic
    distance phase; scattered components are attenuated, angle-jittered
    copies. The list may be empty when the LOS is blocked and no scatterers
    were drawn.
    """
    dist, los_zenith, los_azimuth = los_geometry(uav_pos, bs_pos)
    los_amp = wavelength_m / (4.0 * math.pi * dist)
    los_power = los_amp * los_amp

    blocked = rng.random() < los_blockage_probability(uav_pos[2])
    paths = []
    if not blocked:
        phase = -2.0 * math.pi * dist / wavelength_m
        paths.append(PathComponent(
            amplitude=los_amp * complex(math.cos(phase), math.sin(phase)),
            azimuth_deg=los_azimuth,
            zenith_deg=los_zenith,
            delay_index=0,
        ))

    k_nlos = int(rng.integers(0, NLOS_COUNT_MAX + 1))
    for k in range(k_nlos):
        excess_db = rng.uniform(*NLOS_EXCESS_DB)
        power = los_power * 10.0 ** (-excess_db / 10.0)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        amp = math.sqrt(power) * complex(math.cos(phase), math.sin(phase))
        azimuth = (los_azimuth + rng.uniform(-AOA_JITTER_DEG, AOA_JITTER_DEG)) % 360.0
        zenith = min(180.0, max(0.0, los_zenith + rng.uniform(-AOA_JITTER_DEG, AOA_JITTER_DEG)))
        paths.append(PathComponent(amp, azimuth, zenith, delay_index=k + 1))
    return paths


def aggregate_gain(paths):
    """Total linear power gain: sum of |amplitude|^2 over the path list."""
    if not paths:
        raise GeometryError("cannot aggregate an empty path list")
    return float(sum(abs(p.amplitude) ** 2 for p in paths))


def mean_aoa(paths):
    """Arithmetic mean (zenith, azimuth) over the path list, in degrees.

    Plain arithmetic averaging on raw degrees; no circular unwrap near the
    0/360 seam (deliberate simplification, the jitter window is narrow).
    """
    if not paths:
        raise GeometryError("cannot average an empty path list")
    zen = sum(p.zenith_deg for p in paths) / len(paths)
    azi = sum(p.azimuth_deg for p in paths) / len(paths)
    return zen, azi


def sample_scenario(cfg: SceneConfig, rng) -> Scenario:
    """Sample UAV positions uniformly over the box and synthesize the channel."""
    m, l, n = cfg.num_uavs, cfg.num_bs, cfg.num_beams
    xs = rng.uniform(cfg.x_range[0], cfg.x_range[1], size=m)
    ys = rng.uniform(cfg.y_range[0], cfg.y_range[1], size=m)
    positions = np.column_stack([xs, ys, np.full(m, cfg.altitude_m)])

    gain = np.zeros((m, l, n))
    azimuth = np.zeros((m, l, n))
    zenith = np.zeros((m, l, n))
    for mi in range(m):
        for li in range(l):
            for ni in range(n):
                paths = synthesize_paths(
                    positions[mi], cfg.bs_positions[li], cfg.wavelength_m, rng)
                if paths:
                    gain[mi, li, ni] = aggregate_gain(paths)
                    zenith[mi, li, ni], azimuth[mi, li, ni] = mean_aoa(paths)
                else:
                    # dead link: zero gain, keep the geometric LOS angles
                    _, zenith[mi, li, ni], azimuth[mi, li, ni] = los_geometry(
                        positions[mi], cfg.bs_positions[li])
    channel = ChannelTensor(
        gain=gain.astype(np.float32),
        azimuth=azimuth.astype(np.float32),
        zenith=zenith.astype(np.float32),
    )
    return Scenario(uav_positions=positions.astype(np.float32), channel=channel)


def scenario_rng(seed, index):
    """Counter-based stream for scenario `index` (Philox keyed by seed ^ index)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ np.uint64(index)))


def generate_dataset(cfg: SceneConfig, count, seed=None):
    """Generate `count` scenarios with independent per-index RNG streams."""
    if seed is None:
        seed = cfg.seed
    return [sample_scenario(cfg, scenario_rng(seed, i)) for i in range(count)]


# ---------------------------------------------------------------------------
# binary dataset format

def write_dataset(scenarios, path):
    """Write scenarios as little-endian float32 blocks under an AERRM1 header."""
    if not scenarios:
        raise DatasetFormatError("refusing to write an empty dataset")
    m, l, n = scenarios[0].channel.shape
    for s in scenarios:
        if s.channel.shape != (m, l, n) or s.uav_positions.shape != (m, 3):
            raise DatasetFormatError("all scenarios must share one (M, L, N) shape")
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<4I", len(scenarios), m, l, n))
        for s in scenarios:
            fh.write(np.ascontiguousarray(s.uav_positions, dtype="<f4").tobytes())
            for block in (s.channel.gain, s.channel.azimuth, s.channel.zenith):
                fh.write(np.ascontiguousarray(block, dtype="<f4").tobytes())


def read_dataset(path):
    """Read an AERRM1 dataset; raises DatasetFormatError on any corruption."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(DATASET_MAGIC) + 16:
        raise DatasetFormatError("file too short for a dataset header")
    if data[:len(DATASET_MAGIC)] != DATASET_MAGIC:
        raise DatasetFormatError("bad magic: not an AERRM1 dataset")
    count, m, l, n = struct.unpack_from("<4I", data, len(DATASET_MAGIC))
    per_scenario = (m * 3 + 3 * m * l * n) * 4
    expected = len(DATASET_MAGIC) + 16 + count * per_scenario
    if len(data) != expected:
        raise DatasetFormatError(
            f"payload length mismatch: expected {expected} bytes, got {len(data)}")
    scenarios = []
    offset = len(DATASET_MAGIC) + 16
    block = m * l * n
    for _ in range(count):
        pos = np.frombuffer(data, dtype="<f4", count=m * 3, offset=offset).reshape(m, 3)
        offset += m * 3 * 4
        tensors = []
        for _name in ("gain", "azimuth", "zenith"):
            arr = np.frombuffer(data, dtype="<f4", count=block, offset=offset)
            tensors.append(arr.reshape(m, l, n).copy())
            offset += block * 4
        scenarios.append(Scenario(
            uav_positions=pos.copy(),
            channel=ChannelTensor(gain=tensors[0], azimuth=tensors[1], zenith=tensors[2]),
        ))
    return scenarios
