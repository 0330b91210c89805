"""Stage-1 beam-gain optimization.

For every (UAV, BS, beam) link, anneal the horizontal scan angle inside the
beam's codebook sector to maximize the total antenna gain, then polish the
incumbent with golden-section search. Results are cached in a BeamGainTable
and can be persisted in a binary file sharing the dataset header style.
"""

from dataclasses import dataclass
import math
import struct

import numpy as np

from .antenna import (ARRAY_GAIN_FLOOR_DB, bs_frame_angles, element_gain,
                      steering_vector, total_gain_db, wrap_deg)
from .errors import DatasetFormatError, OptimizerError

TABLE_MAGIC = b"AERRB1"

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
REFINE_TOL_DEG = 1e-3
# local refinement bracket: +-(window width / 20) around the incumbent
REFINE_BRACKET_FRAC = 1.0 / 20.0
CAUCHY_SCALE_FRAC = 1.0 / 20.0
REFINE_TEMP_FRAC = 0.01


@dataclass(frozen=True)
class BeamGainTable:
    """Optimized gain (dBi) and scan angle (deg in [-180, 180)) per link."""

    g_star: np.ndarray    # (M, L, N)
    phi_star: np.ndarray  # (M, L, N)

    def __post_init__(self):
        if self.g_star.shape != self.phi_star.shape or self.g_star.ndim != 3:
            raise DatasetFormatError("beam table blocks must share an M x L x N shape")
        if not np.all(np.isfinite(self.g_star)):
            raise DatasetFormatError("optimized gains must be finite")

    @property
    def shape(self):
        return self.g_star.shape


def beam_sector(beam_index, num_beams):
    """Codebook azimuth sector assigned to one beam, in the BS frame."""
    width = 360.0 / num_beams
    lo = -180.0 + beam_index * width
    return (lo, lo + width)


def _golden_section_max(objective, lo, hi, tol, best):
    """Golden-section maximization on [lo, hi]; folds evaluations into `best`."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = objective(x1), objective(x2)
    for x, f in ((x1, f1), (x2, f2)):
        if f > best[1]:
            best[0], best[1] = x, f
    while (b - a) > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = objective(x2)
            if f2 > best[1]:
                best[0], best[1] = x2, f2
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = objective(x1)
            if f1 > best[1]:
                best[0], best[1] = x1, f1
    return best


def optimize_scan_angle(objective, window, cfg, rng):
    """Anneal + refine the scan angle; returns (phi_star, g_star).

    Cauchy perturbations, Metropolis acceptance min{1, exp(dg/T)}, geometric
    cooling, wrap-around into the window. The reported optimum is the best
    candidate ever evaluated, so it never falls below the initial sample.
    """
    lo, hi = float(window[0]), float(window[1])
    if hi < lo:
        raise OptimizerError(f"empty scan window [{lo}, {hi}]")
    width = hi - lo

    def safe_objective(phi):
        val = float(objective(phi))
        if not math.isfinite(val):
            raise OptimizerError(f"objective returned non-finite value at {phi:.4f} deg")
        return val

    if width == 0.0:
        return lo, safe_objective(lo)

    current = rng.uniform(lo, hi)
    g_current = safe_objective(current)
    best = [current, g_current]

    temp = cfg.t0
    stagnation = 0
    crossed_refine_temp = False
    for _ in range(cfg.t_max):
        scale = temp * width * CAUCHY_SCALE_FRAC
        delta = scale * math.tan(math.pi * (rng.random() - 0.5))
        candidate = lo + (current + delta - lo) % width
        g_candidate = safe_objective(candidate)
        if g_candidate > best[1]:
            best[0], best[1] = candidate, g_candidate
            stagnation = 0
        else:
            stagnation += 1
        dg = g_candidate - g_current
        if dg >= 0.0 or rng.random() <= math.exp(dg / temp):
            current, g_current = candidate, g_candidate
        temp *= cfg.alpha

        refine = stagnation >= cfg.refine_trigger
        if temp < REFINE_TEMP_FRAC * cfg.t0 and not crossed_refine_temp:
            crossed_refine_temp = True
            refine = True
        if refine:
            bracket = width * REFINE_BRACKET_FRAC
            _golden_section_max(
                safe_objective,
                max(lo, best[0] - bracket), min(hi, best[0] + bracket),
                REFINE_TOL_DEG, best)
            stagnation = 0
        if temp < cfg.epsilon_db:
            break

    bracket = width * REFINE_BRACKET_FRAC
    _golden_section_max(
        safe_objective,
        max(lo, best[0] - bracket), min(hi, best[0] + bracket),
        REFINE_TOL_DEG, best)
    return best[0], best[1]


def make_link_objective(pat, array_cfg, zenith_at_uav, azimuth_at_uav, boresight_deg):
    """Total-gain objective over the scan angle for one link direction.

    Precomputes the steering vector and the (scan-independent) element gain;
    accepts scalar or vector scan angles.
    """
    theta, phi = bs_frame_angles(zenith_at_uav, azimuth_at_uav, boresight_deg)
    elem_db = element_gain(pat, theta, phi)
    vec = np.conj(steering_vector(array_cfg, theta, phi))
    u = np.repeat(np.arange(array_cfg.n_h), array_cfg.n_v)
    v = np.tile(np.arange(array_cfg.n_v), array_cfg.n_h)
    tilt = math.radians(array_cfg.tilt_deg)
    u_coef = 2.0 * math.pi * u * array_cfg.d_h * math.cos(tilt)
    v_phase = 2.0 * math.pi * v * array_cfg.d_v * math.sin(tilt)
    norm = math.sqrt(array_cfg.n_h * array_cfg.n_v)

    def objective(scan_deg):
        scan = np.radians(np.asarray(scan_deg, dtype=float))
        phase = -np.multiply.outer(np.sin(scan), u_coef) + v_phase
        inner = (np.exp(1j * phase) * vec).sum(axis=-1) / norm
        power = np.abs(inner) ** 2
        arr_db = np.where(power > 0.0,
                          10.0 * np.log10(np.where(power > 0.0, power, 1.0)),
                          ARRAY_GAIN_FLOOR_DB)
        out = elem_db + arr_db
        return float(out) if np.ndim(scan_deg) == 0 else out

    return objective


def link_rng(seed, scenario_index, m, l, n):
    """Independent counter-based stream per (scenario, UAV, BS, beam)."""
    sub = scenario_index * 1_000_003 + m * 10_007 + l * 101 + n + 1
    return np.random.Generator(np.random.Philox(key=(int(seed) & (2**64 - 1)) | (sub << 64)))


def build_beam_gain_table(scenario, pat, array_cfg, anneal_cfg, scenario_index=0):
    """Optimize every (m, l, n) link of one scenario into a BeamGainTable."""
    m_count, l_count, n_count = scenario.channel.shape
    if len(array_cfg.boresight_az_deg) != l_count:
        raise OptimizerError("array config must carry one boresight per BS")
    g_star = np.zeros((m_count, l_count, n_count))
    phi_star = np.zeros((m_count, l_count, n_count))
    for m in range(m_count):
        for l in range(l_count):
            for n in range(n_count):
                # evaluation direction: that beam's own mean AoA
                objective = make_link_objective(
                    pat, array_cfg,
                    float(scenario.channel.zenith[m, l, n]),
                    float(scenario.channel.azimuth[m, l, n]),
                    array_cfg.boresight_az_deg[l])
                window = beam_sector(n, n_count)
                rng = link_rng(anneal_cfg.seed, scenario_index, m, l, n)
                try:
                    phi, gain = optimize_scan_angle(objective, window, anneal_cfg, rng)
                except OptimizerError as exc:
                    raise OptimizerError(f"link (m={m}, l={l}, n={n}): {exc}") from exc
                g_star[m, l, n] = gain
                phi_star[m, l, n] = wrap_deg(phi)
    return BeamGainTable(g_star=g_star, phi_star=phi_star)


# ---------------------------------------------------------------------------
# binary table format (header conventions shared with the dataset format)

def write_beam_tables(tables, path):
    if not tables:
        raise DatasetFormatError("refusing to write an empty beam table file")
    shape = tables[0].shape
    for t in tables:
        if t.shape != shape:
            raise DatasetFormatError("all beam tables must share one (M, L, N) shape")
    with open(path, "wb") as fh:
        fh.write(TABLE_MAGIC)
        fh.write(struct.pack("<4I", len(tables), *shape))
        for t in tables:
            fh.write(np.ascontiguousarray(t.g_star, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(t.phi_star, dtype="<f4").tobytes())


def read_beam_tables(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(TABLE_MAGIC) + 16:
        raise DatasetFormatError("file too short for a beam table header")
    if data[:len(TABLE_MAGIC)] != TABLE_MAGIC:
        raise DatasetFormatError("bad magic: not an AERRB1 beam table")
    count, m, l, n = struct.unpack_from("<4I", data, len(TABLE_MAGIC))
    block = m * l * n
    expected = len(TABLE_MAGIC) + 16 + count * 2 * block * 4
    if len(data) != expected:
        raise DatasetFormatError(
            f"payload length mismatch: expected {expected} bytes, got {len(data)}")
    offset = len(TABLE_MAGIC) + 16
    tables = []
    for _ in range(count):
        g = np.frombuffer(data, dtype="<f4", count=block, offset=offset)
        offset += block * 4
        p = np.frombuffer(data, dtype="<f4", count=block, offset=offset)
        offset += block * 4
        tables.append(BeamGainTable(
            g_star=g.reshape(m, l, n).astype(float),
            phi_star=p.reshape(m, l, n).astype(float)))
    return tables
