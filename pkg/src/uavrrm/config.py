"""Configuration dataclasses and the flat key-value config file format.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Pairs are comma separated ("-200, 130"), position lists use ``;`` between
points ("-127,92,5; -30,30,5.2").
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0


# ---------------------------------------------------------------------------
# flat key-value parsing

def parse_kv_text(text):
    """Parse flat key-value text into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_kv_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read())


def _as_float(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number: {kv[key]!r}") from exc


def _as_int(kv, key, default=None):
    val = _as_float(kv, key, default)
    if val != int(val):
        raise ConfigError(f"key {key!r}: expected integer, got {val}")
    return int(val)


def _as_pair(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    parts = [p for p in kv[key].split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigError(f"key {key!r}: expected two comma-separated numbers")
    return (float(parts[0]), float(parts[1]))


def _as_points(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    points = []
    for chunk in kv[key].split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [float(p) for p in chunk.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"key {key!r}: each position needs x,y,z")
        points.append(tuple(parts))
    return points


# ---------------------------------------------------------------------------
# scene / channel twin

@dataclass
class SceneConfig:
    """Geometry and sampling domain for one scenario family."""

    x_range: tuple = (-200.0, 130.0)
    y_range: tuple = (-150.0, 150.0)
    altitude_m: float = 60.0
    num_uavs: int = 4
    num_bs: int = 2
    num_beams: int = 4
    bs_positions: tuple = ((-127.0, 92.0, 5.0), (-30.0, 30.0, 5.2))
    carrier_freq_hz: float = 3.5e9
    seed: int = 0

    def __post_init__(self):
        if self.num_uavs < 1 or self.num_bs < 1 or self.num_beams < 1:
            raise ConfigError("num_uavs, num_bs and num_beams must all be >= 1")
        if self.x_range[0] > self.x_range[1] or self.y_range[0] > self.y_range[1]:
            raise ConfigError("x_range/y_range must be nonempty intervals")
        if len(self.bs_positions) != self.num_bs:
            raise ConfigError(
                f"expected {self.num_bs} BS positions, got {len(self.bs_positions)}")
        if len(set(self.bs_positions)) != len(self.bs_positions):
            raise ConfigError("BS positions must be pairwise distinct")
        if self.altitude_m <= max(p[2] for p in self.bs_positions):
            raise ConfigError("UAV altitude must exceed every BS height")
        if self.carrier_freq_hz <= 0:
            raise ConfigError("carrier_freq_hz must be positive")

    @property
    def wavelength_m(self):
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    @classmethod
    def from_kv(cls, kv):
        return cls(
            x_range=_as_pair(kv, "x_range", cls.x_range),
            y_range=_as_pair(kv, "y_range", cls.y_range),
            altitude_m=_as_float(kv, "altitude_m", cls.altitude_m),
            num_uavs=_as_int(kv, "num_uavs", cls.num_uavs),
            num_bs=_as_int(kv, "num_bs", cls.num_bs),
            num_beams=_as_int(kv, "num_beams", cls.num_beams),
            bs_positions=tuple(_as_points(kv, "bs_positions", cls.bs_positions)),
            carrier_freq_hz=_as_float(kv, "carrier_freq_hz", cls.carrier_freq_hz),
            seed=_as_int(kv, "seed", cls.seed),
        )


# ---------------------------------------------------------------------------
# antenna

@dataclass(frozen=True)
class ElementPattern:
    """Sectorized element pattern constants (dB domain)."""

    g_e_max_dbi: float = -8.0
    theta_3db_deg: float = 65.0
    phi_3db_deg: float = 90.0
    a_m_db: float = 30.0
    sla_v_db: float = 30.0

    def __post_init__(self):
        if self.theta_3db_deg <= 0 or self.phi_3db_deg <= 0:
            raise ConfigError("3 dB beamwidths must be positive")
        if self.a_m_db <= 0 or self.sla_v_db <= 0:
            raise ConfigError("a_m_db and sla_v_db must be positive")

    @classmethod
    def from_kv(cls, kv):
        return cls(
            g_e_max_dbi=_as_float(kv, "g_e_max_dbi", cls.g_e_max_dbi),
            theta_3db_deg=_as_float(kv, "theta_3db_deg", cls.theta_3db_deg),
            phi_3db_deg=_as_float(kv, "phi_3db_deg", cls.phi_3db_deg),
            a_m_db=_as_float(kv, "a_m_db", cls.a_m_db),
            sla_v_db=_as_float(kv, "sla_v_db", cls.sla_v_db),
        )


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform planar array layout; spacings in wavelengths.

    boresight_az_deg holds one local-frame boresight azimuth per BS; each BS
    points its array at the scene origin (see geometry helpers in antenna.py).
    """

    n_h: int = 4
    n_v: int = 4
    d_h: float = 0.5
    d_v: float = 0.5
    tilt_deg: float = 15.0
    boresight_az_deg: tuple = ()

    def __post_init__(self):
        if self.n_h * self.n_v < 1:
            raise ConfigError("array must contain at least one element")
        if self.d_h <= 0 or self.d_v <= 0:
            raise ConfigError("element spacings must be positive")

    @classmethod
    def from_kv(cls, kv, boresight_az_deg=()):
        return cls(
            n_h=_as_int(kv, "n_h", cls.n_h),
            n_v=_as_int(kv, "n_v", cls.n_v),
            d_h=_as_float(kv, "d_h", cls.d_h),
            d_v=_as_float(kv, "d_v", cls.d_v),
            tilt_deg=_as_float(kv, "tilt_deg", cls.tilt_deg),
            boresight_az_deg=tuple(boresight_az_deg),
        )


# ---------------------------------------------------------------------------
# link budget / environment

@dataclass(frozen=True)
class LinkBudget:
    """Per-beam transmit power, bandwidth, noise and the over-capacity penalty.

    Total BS power is split equally over the beams; reward is reported in
    Mb/s units (per-UAV rates divided by 1e6 before the penalty subtraction).
    """

    tx_power_w: float = 40.0 / 4
    bandwidth_hz: float = 20e6
    noise_dbm_hz: float = -174.0
    penalty_eta: float = 1e3
    capacity: int = 4

    def __post_init__(self):
        if self.tx_power_w <= 0 or self.bandwidth_hz <= 0:
            raise ConfigError("tx_power_w and bandwidth_hz must be positive")
        if self.capacity < 1:
            raise ConfigError("capacity must be >= 1")

    @property
    def noise_power_w(self):
        """sigma^2 = linear(N0 dBm/Hz) * B, in watts."""
        return 10.0 ** (self.noise_dbm_hz / 10.0) * 1e-3 * self.bandwidth_hz

    @classmethod
    def from_kv(cls, kv, num_beams):
        total = _as_float(kv, "total_power_w", 40.0)
        capacity = _as_int(kv, "capacity", num_beams)
        return cls(
            tx_power_w=total / num_beams,
            bandwidth_hz=_as_float(kv, "bandwidth_hz", 20e6),
            noise_dbm_hz=_as_float(kv, "noise_dbm_hz", -174.0),
            penalty_eta=_as_float(kv, "penalty_eta", 1e3),
            capacity=capacity,
        )


# ---------------------------------------------------------------------------
# annealing

@dataclass(frozen=True)
class AnnealConfig:
    """Schedule for the scan-angle annealer with local refinement."""

    t0: float = 10.0
    alpha: float = 0.95
    t_max: int = 300
    epsilon_db: float = 1e-4
    refine_trigger: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.t0 <= 0:
            raise ConfigError("t0 must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if self.epsilon_db <= 0:
            raise ConfigError("epsilon_db must be positive")


# ---------------------------------------------------------------------------
# learners

@dataclass
class PPOConfig:
    gamma: float = 0.99
    lam: float = 0.97
    clip_eps: float = 0.15
    entropy_start: float = 0.2
    entropy_end: float = 0.005
    lr: float = 3e-4
    batch_size: int = 2056
    num_minibatches: int = 8
    epochs: int = 12
    total_steps: int = 200_000
    eval_every: int = 10_280
    eval_scenarios: int = 64
    trunk_dims: tuple = (1024, 512, 256, 128)
    critic_dims: tuple = (64, 32)
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.lam <= 1.0):
            raise ConfigError("gamma and lam must lie in [0, 1]")
        if self.clip_eps <= 0:
            raise ConfigError("clip_eps must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size % self.num_minibatches:
            raise ConfigError("batch_size must divide evenly into minibatches")

    @classmethod
    def from_kv(cls, kv):
        base = cls()
        return cls(
            gamma=_as_float(kv, "gamma", base.gamma),
            lam=_as_float(kv, "lam", base.lam),
            clip_eps=_as_float(kv, "clip_eps", base.clip_eps),
            entropy_start=_as_float(kv, "entropy_start", base.entropy_start),
            entropy_end=_as_float(kv, "entropy_end", base.entropy_end),
            lr=_as_float(kv, "lr", base.lr),
            batch_size=_as_int(kv, "batch_size", base.batch_size),
            num_minibatches=_as_int(kv, "num_minibatches", base.num_minibatches),
            epochs=_as_int(kv, "epochs", base.epochs),
            total_steps=_as_int(kv, "total_steps", base.total_steps),
            eval_every=_as_int(kv, "eval_every", base.eval_every),
            eval_scenarios=_as_int(kv, "eval_scenarios", base.eval_scenarios),
            seed=_as_int(kv, "seed", base.seed),
        )


@dataclass
class DQNConfig:
    lr: float = 3e-4
    batch_size: int = 256
    buffer_capacity: int = 300_000
    min_fill: int = 10_000
    target_sync_every: int = 1_000
    # One learner step per 8 env steps: a single core cannot sustain the
    # 1-per-step cadence inside the acceptance-suite time budget, and this
    # still applies 2.7x more sample-updates per env step than PPO does.
    update_every: int = 8
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_steps: int = 500_000
    total_steps: int = 200_000
    eval_every: int = 10_280
    eval_scenarios: int = 64
    trunk_dims: tuple = (1024, 512, 256, 128)
    seed: int = 0

    def __post_init__(self):
        if self.min_fill > self.buffer_capacity:
            raise ConfigError("min_fill cannot exceed buffer_capacity")
        if self.eps_decay_steps < 1:
            raise ConfigError("eps_decay_steps must be >= 1")

    @classmethod
    def from_kv(cls, kv):
        base = cls()
        return cls(
            lr=_as_float(kv, "lr", base.lr),
            batch_size=_as_int(kv, "batch_size", base.batch_size),
            buffer_capacity=_as_int(kv, "buffer_capacity", base.buffer_capacity),
            min_fill=_as_int(kv, "min_fill", base.min_fill),
            target_sync_every=_as_int(kv, "target_sync_every", base.target_sync_every),
            update_every=_as_int(kv, "update_every", base.update_every),
            eps_start=_as_float(kv, "eps_start", base.eps_start),
            eps_end=_as_float(kv, "eps_end", base.eps_end),
            eps_decay_steps=_as_int(kv, "eps_decay_steps", base.eps_decay_steps),
            total_steps=_as_int(kv, "total_steps", base.total_steps),
            eval_every=_as_int(kv, "eval_every", base.eval_every),
            eval_scenarios=_as_int(kv, "eval_scenarios", base.eval_scenarios),
            seed=_as_int(kv, "seed", base.seed),
        )


def boresights_toward_origin(bs_positions):
    """Azimuth (degrees) pointing each BS at the scene origin."""
    out = []
    for x, y, _z in bs_positions:
        if x == 0.0 and y == 0.0:
            out.append(0.0)
        else:
            out.append(math.degrees(math.atan2(-y, -x)))
    return tuple(out)
