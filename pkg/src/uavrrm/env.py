"""Single-step association environment.

Decodes per-UAV BS-beam choices, enforces per-BS capacity by power-ranked
admission, resolves beam conflicts strongest-wins, accumulates inter- and
intra-cell interference over the admitted links, and emits the penalized
reward. Rates are computed in bits/s; the reward uses Mb/s units before the
over-capacity penalty is subtracted.

Tie-breaking is lowest-UAV-index everywhere, for determinism.
"""

from dataclasses import dataclass
import math

import numpy as np

from .antenna import to_linear
from .errors import ConfigError, DatasetFormatError

GAIN_DB_FLOOR = -200.0

# reserved sentinel for UAVs a saturated heuristic could not place: the UAV
# contends nowhere, transmits nothing and earns zero rate
DENIED_ACTION = -1


def assemble_state(channel):
    """Flatten the channel tensor into [vec(gain), vec(azimuth), vec(zenith)]."""
    if channel.gain.ndim != 3:
        raise DatasetFormatError("channel tensor must be M x L x N")
    return np.concatenate([
        np.asarray(channel.gain, dtype=float).ravel(),
        np.asarray(channel.azimuth, dtype=float).ravel(),
        np.asarray(channel.zenith, dtype=float).ravel(),
    ])


def decode_action(action, num_bs, num_beams):
    """Split a flat BS-beam index into (bs, beam)."""
    if not 0 <= action < num_bs * num_beams:
        raise ConfigError(f"action {action} outside [0, {num_bs * num_beams})")
    return action // num_beams, action % num_beams


def desired_power(m, l, n, channel, beams, budget):
    """Received power P_tx * |h|^2 * linear(G*), in watts."""
    return budget.tx_power_w * float(channel.gain[m, l, n]) * to_linear(
        float(beams.g_star[m, l, n]))


@dataclass
class AdmissionResult:
    admitted: tuple           # active UAVs (after beam-conflict resolution)
    denied: tuple             # complement of admitted
    contenders: dict          # per-BS contender lists
    overcap: int              # capacity excess summed over BSs
    rates: np.ndarray         # per-UAV throughput, bits/s (0 when denied)
    reward: float             # Mb/s units; None until rates are computed


def admit(action, powers, num_bs, num_beams, capacity):
    """Capacity-ranked admission plus strongest-wins beam-conflict resolution.

    Returns an AdmissionResult with rates zeroed and reward unset.
    """
    m_count = len(action)
    pairs = [None if int(a) == DENIED_ACTION
             else decode_action(int(a), num_bs, num_beams) for a in action]
    contenders = {l: [m for m in range(m_count)
                      if pairs[m] is not None and pairs[m][0] == l]
                  for l in range(num_bs)}

    overcap = 0
    admitted = []
    for l in range(num_bs):
        group = contenders[l]
        overcap += max(0, len(group) - capacity)
        if len(group) > capacity:
            ranked = sorted(group, key=lambda m: (-powers[m], m))
            group = sorted(ranked[:capacity])
        admitted.extend(group)

    # beam exclusivity: among admitted UAVs sharing a (BS, beam), the
    # strongest keeps it; losers are denied but do not add to overcap
    winners = {}
    for m in admitted:
        key = pairs[m]
        if key not in winners:
            winners[key] = m
        elif (powers[m], -m) > (powers[winners[key]], -winners[key]):
            winners[key] = m
    active = sorted(winners.values())
    denied = tuple(m for m in range(m_count) if m not in set(active))
    return AdmissionResult(
        admitted=tuple(active), denied=denied, contenders=contenders,
        overcap=overcap, rates=np.zeros(m_count), reward=None)


def step(action, channel, beams, budget):
    """Run one joint action through admission, SINR and reward computation."""
    m_count, num_bs, num_beams = channel.shape
    if len(action) != m_count:
        raise ConfigError(f"expected {m_count} per-UAV actions, got {len(action)}")
    pairs = [None if int(a) == DENIED_ACTION
             else decode_action(int(a), num_bs, num_beams) for a in action]
    powers = np.array([0.0 if pairs[m] is None
                       else desired_power(m, *pairs[m], channel, beams, budget)
                       for m in range(m_count)])
    result = admit(action, powers, num_bs, num_beams, budget.capacity)

    noise = budget.noise_power_w
    active = result.admitted
    for m in active:
        signal = powers[m]
        interference = 0.0
        for other in active:
            if other == m:
                continue
            lo, no = pairs[other]
            interference += budget.tx_power_w * float(channel.gain[m, lo, no]) \
                * to_linear(float(beams.g_star[m, lo, no]))
        sinr = signal / (interference + noise)
        result.rates[m] = budget.bandwidth_hz * math.log2(1.0 + sinr)

    result.reward = float(result.rates[list(active)].sum() / 1e6) / m_count \
        - budget.penalty_eta * result.overcap
    return result


class StateNormalizer:
    """Learner-facing view of the raw state.

    The gain block is converted to dB (floored at GAIN_DB_FLOOR) and each of
    the three blocks is z-scored with statistics frozen from a training
    dataset.
    """

    def __init__(self, means, stds):
        self.means = np.asarray(means, dtype=float)
        self.stds = np.maximum(np.asarray(stds, dtype=float), 1e-12)
        if self.means.shape != (3,) or self.stds.shape != (3,):
            raise ConfigError("normalizer expects one (mean, std) per state block")

    @staticmethod
    def _gain_db(gain_block):
        safe = np.maximum(np.asarray(gain_block, dtype=float), 10.0 ** (GAIN_DB_FLOOR / 10.0))
        return np.maximum(10.0 * np.log10(safe), GAIN_DB_FLOOR)

    @classmethod
    def fit(cls, scenarios):
        gains = np.concatenate([cls._gain_db(s.channel.gain).ravel() for s in scenarios])
        azis = np.concatenate([np.asarray(s.channel.azimuth, dtype=float).ravel()
                               for s in scenarios])
        zens = np.concatenate([np.asarray(s.channel.zenith, dtype=float).ravel()
                               for s in scenarios])
        means = [gains.mean(), azis.mean(), zens.mean()]
        stds = [gains.std(), azis.std(), zens.std()]
        return cls(means, stds)

    def transform(self, raw_state):
        """Normalize one raw state vector (or a batch with states as rows)."""
        raw = np.asarray(raw_state, dtype=float)
        block = raw.shape[-1] // 3
        out = np.empty_like(raw)
        g = self._gain_db(raw[..., :block])
        out[..., :block] = (g - self.means[0]) / self.stds[0]
        out[..., block:2 * block] = (raw[..., block:2 * block] - self.means[1]) / self.stds[1]
        out[..., 2 * block:] = (raw[..., 2 * block:] - self.means[2]) / self.stds[2]
        return out


class AssociationEnv:
    """Convenience wrapper binding scenarios, beam tables and the budget."""

    def __init__(self, scenarios, beam_tables, budget, normalizer=None):
        if len(scenarios) != len(beam_tables):
            raise DatasetFormatError("need one beam table per scenario")
        for s, t in zip(scenarios, beam_tables):
            if s.channel.shape != t.shape:
                raise DatasetFormatError("scenario/beam-table shape mismatch")
        self.scenarios = scenarios
        self.beam_tables = beam_tables
        self.budget = budget
        if normalizer is None:
            # empty datasets are legal for evaluation; identity normalizer
            normalizer = StateNormalizer.fit(scenarios) if scenarios \
                else StateNormalizer([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
        self.normalizer = normalizer

    def __len__(self):
        return len(self.scenarios)

    @property
    def shape(self):
        return self.scenarios[0].channel.shape

    @property
    def state_dim(self):
        m, l, n = self.shape
        return 3 * m * l * n

    def raw_state(self, index):
        return assemble_state(self.scenarios[index].channel)

    def state(self, index):
        return self.normalizer.transform(self.raw_state(index))

    def step(self, index, action):
        return step(action, self.scenarios[index].channel,
                    self.beam_tables[index], self.budget)
