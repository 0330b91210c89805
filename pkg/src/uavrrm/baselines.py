"""Heuristic and combinatorial association baselines.

All baselines emit flat per-UAV BS-beam indices compatible with the shared
environment; UAVs a saturated greedy heuristic cannot place receive the
DENIED_ACTION sentinel. Effective gain for greedy beam choice is
|h|^2 * linear(G*), i.e. the received-power quantity without the transmit
power factor.
"""

import numpy as np
from scipy.optimize import linear_sum_assignment

from .antenna import to_linear
from .env import DENIED_ACTION
from .errors import InfeasibleError


def signal_power_matrix(channel, beams, budget):
    """Per-link received power P_tx * |h|^2 * linear(G*), shape (M, L*N)."""
    m, l, n = channel.shape
    power = budget.tx_power_w * np.asarray(channel.gain, dtype=float) \
        * to_linear(np.asarray(beams.g_star, dtype=float))
    return power.reshape(m, l * n)


def effective_gain(channel, beams):
    """Greedy beam-choice metric |h|^2 * linear(G*), shape (M, L, N)."""
    return np.asarray(channel.gain, dtype=float) * to_linear(
        np.asarray(beams.g_star, dtype=float))


def hungarian_assign(cost):
    """Minimum-cost matching of UAV rows to (BS, beam) columns."""
    cost = np.asarray(cost, dtype=float)
    m, cols = cost.shape
    if m > cols:
        raise InfeasibleError(
            f"{m} UAVs cannot be matched one-to-one onto {cols} BS-beam pairs")
    if not np.all(np.isfinite(cost)):
        raise InfeasibleError("cost matrix contains non-finite entries")
    rows, chosen = linear_sum_assignment(cost)
    action = np.zeros(m, dtype=int)
    action[rows] = chosen
    return action


def hungarian_from_power(channel, beams, budget):
    return hungarian_assign(-signal_power_matrix(channel, beams, budget))


def _greedy_beam_pick(m, ranked_bs, gains, num_beams, taken):
    for l in ranked_bs:
        free = [n for n in range(num_beams) if (l, n) not in taken]
        if free:
            # highest effective gain among free beams, lowest index on ties
            n_best = max(free, key=lambda n: (gains[m, l, n], -n))
            taken.add((l, n_best))
            return l * num_beams + n_best
    return DENIED_ACTION


def max_gain_assign(channel, beams):
    """BS by highest beam-averaged channel gain, then best free beam."""
    m_count, l_count, n_count = channel.shape
    gains = effective_gain(channel, beams)
    avg_gain = np.asarray(channel.gain, dtype=float).mean(axis=2)  # (M, L)
    taken = set()
    action = np.zeros(m_count, dtype=int)
    for m in range(m_count):
        ranked = sorted(range(l_count), key=lambda l: (-avg_gain[m, l], l))
        action[m] = _greedy_beam_pick(m, ranked, gains, n_count, taken)
    return action


def closest_bs_assign(uav_positions, bs_positions, channel, beams):
    """Nearest BS by 3D distance, then best free beam (lowest index on ties)."""
    m_count, l_count, n_count = channel.shape
    gains = effective_gain(channel, beams)
    uav = np.asarray(uav_positions, dtype=float)
    bs = np.asarray(bs_positions, dtype=float)
    taken = set()
    action = np.zeros(m_count, dtype=int)
    for m in range(m_count):
        dists = np.linalg.norm(bs - uav[m], axis=1)
        ranked = sorted(range(l_count), key=lambda l: (dists[l], l))
        action[m] = _greedy_beam_pick(m, ranked, gains, n_count, taken)
    return action


def random_assign(num_uavs, num_bs, num_beams, rng):
    """Uniform independent BS-beam choice; collisions allowed by design."""
    return rng.integers(0, num_bs * num_beams, size=num_uavs)
