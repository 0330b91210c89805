"""Evaluation harness: per-scenario records, aggregates, latency timing.

Per-record outputs (rates, reward, over-capacity count) are deterministic
for deterministic methods; wall-clock latency is measured separately so the
deterministic result files stay bit-reproducible across runs.
"""

from dataclasses import dataclass
import csv
import json
import time

import numpy as np

from . import baselines
from .channel import scenario_rng
from .errors import EvaluationError

METHOD_NAMES = ("ppo", "dqn", "hungarian", "maxgain", "closest", "random")


@dataclass
class EvalRecord:
    scenario_id: int
    method: str
    rates_mbps: np.ndarray   # per-UAV throughput in Mb/s
    reward: float            # Mb/s units minus the over-capacity penalty
    overcap: int
    admitted: int
    latency_ms: float


# ---------------------------------------------------------------------------
# method wrappers: anything with .name and .decide(index, env) -> action

class PolicyMethod:
    """Greedy PPO policy; uses the normalizer frozen at training time."""

    def __init__(self, policy, normalizer=None, name="ppo"):
        self.name = name
        self.policy = policy
        self.normalizer = normalizer

    def _state(self, index, env):
        if self.normalizer is not None:
            return self.normalizer.transform(env.raw_state(index))
        return env.state(index)

    def decide(self, index, env):
        actions, _, _ = self.policy.act(self._state(index, env), mode="greedy")
        return actions


class QNetMethod:
    def __init__(self, qnet, normalizer=None, name="dqn"):
        self.name = name
        self.qnet = qnet
        self.normalizer = normalizer

    def _state(self, index, env):
        if self.normalizer is not None:
            return self.normalizer.transform(env.raw_state(index))
        return env.state(index)

    def decide(self, index, env):
        from .dqn import act_greedy_batch
        return act_greedy_batch(self.qnet, self._state(index, env)[None, :])[0]


class HungarianMethod:
    name = "hungarian"

    def decide(self, index, env):
        return baselines.hungarian_from_power(
            env.scenarios[index].channel, env.beam_tables[index], env.budget)


class MaxGainMethod:
    name = "maxgain"

    def decide(self, index, env):
        return baselines.max_gain_assign(
            env.scenarios[index].channel, env.beam_tables[index])


class ClosestBsMethod:
    name = "closest"

    def __init__(self, bs_positions):
        self.bs_positions = bs_positions

    def decide(self, index, env):
        s = env.scenarios[index]
        return baselines.closest_bs_assign(
            s.uav_positions, self.bs_positions, s.channel, env.beam_tables[index])


class RandomMethod:
    name = "random"

    def __init__(self, seed=0):
        self.seed = seed

    def decide(self, index, env):
        m, l, n = env.shape
        return baselines.random_assign(m, l, n, scenario_rng(self.seed, index))


# ---------------------------------------------------------------------------

def evaluate(method, env, check_consistency=True):
    """One EvalRecord per scenario; verifies the reward identity per record."""
    if len(env) == 0:
        return []
    m_count = env.shape[0]
    records = []
    for i in range(len(env)):
        t0 = time.perf_counter()
        action = method.decide(i, env)
        latency_ms = (time.perf_counter() - t0) * 1e3
        result = env.step(i, action)
        rates_mbps = result.rates / 1e6
        if check_consistency:
            expected = rates_mbps[list(result.admitted)].sum() / m_count \
                - env.budget.penalty_eta * result.overcap
            if abs(result.reward - expected) > 1e-9 * max(1.0, abs(expected)):
                raise EvaluationError(
                    f"reward identity violated on scenario {i} "
                    f"({result.reward} vs {expected})")
        records.append(EvalRecord(
            scenario_id=i, method=method.name, rates_mbps=rates_mbps,
            reward=result.reward, overcap=result.overcap,
            admitted=len(result.admitted), latency_ms=max(latency_ms, 1e-9)))
    return records


def pooled_rates(records):
    return np.concatenate([r.rates_mbps for r in records]) if records else np.zeros(0)


def aggregate(records, cdf_points=200):
    """Summary statistics over one method's records."""
    if not records:
        raise EvaluationError("cannot aggregate an empty record list")
    rates = pooled_rates(records)
    rewards = np.array([r.reward for r in records])
    grid = np.linspace(0.0, float(rates.max()) if rates.size else 1.0, cdf_points)
    cdf = np.array([(rates <= x).mean() for x in grid])
    return {
        "method": records[0].method,
        "num_scenarios": len(records),
        "mean_rate_mbps": float(rates.mean()),
        "p5_rate_mbps": float(np.percentile(rates, 5)),
        "p50_rate_mbps": float(np.percentile(rates, 50)),
        "p95_rate_mbps": float(np.percentile(rates, 95)),
        "mean_reward": float(rewards.mean()),
        "p5_reward": float(np.percentile(rewards, 5)),
        "mean_overcap": float(np.mean([r.overcap for r in records])),
        "mean_admitted": float(np.mean([r.admitted for r in records])),
        "cdf_rate_mbps": grid.tolist(),
        "cdf_fraction": cdf.tolist(),
    }


def time_callable(fn, repetitions=100, warmup=10):
    """Mean/std/median-of-means latency of fn() in milliseconds."""
    for _ in range(warmup):
        fn()
    samples = np.zeros(repetitions)
    for k in range(repetitions):
        t0 = time.perf_counter()
        fn()
        samples[k] = (time.perf_counter() - t0) * 1e3
    chunks = np.array_split(samples, 10)
    return {
        "mean_ms": float(samples.mean()),
        "std_ms": float(samples.std()),
        "median_of_means_ms": float(np.median([c.mean() for c in chunks])),
        "repetitions": repetitions,
    }


def benchmark_latency(method, env, repetitions=100, warmup=10, indices=None):
    """Timing statistics for method.decide over cycling scenario indices."""
    if indices is None:
        indices = range(min(len(env), 16))
    indices = list(indices)
    counter = {"k": 0}

    def call():
        i = indices[counter["k"] % len(indices)]
        counter["k"] += 1
        method.decide(i, env)

    stats = time_callable(call, repetitions=repetitions, warmup=warmup)
    stats["method"] = method.name
    stats["num_uavs"] = env.shape[0]
    return stats


# ---------------------------------------------------------------------------
# file outputs

def write_records_csv(records, path, include_latency=False):
    """One CSV per method, fixed column order, one row per scenario."""
    if not records:
        raise EvaluationError("no records to write")
    m = len(records[0].rates_mbps)
    header = ["scenario_id", "method", "reward", "overcap", "admitted"]
    header += [f"rate_mbps_{k}" for k in range(m)]
    if include_latency:
        header.append("latency_ms")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in records:
            row = [r.scenario_id, r.method, repr(r.reward), r.overcap, r.admitted]
            row += [repr(float(x)) for x in r.rates_mbps]
            if include_latency:
                row.append(repr(r.latency_ms))
            writer.writerow(row)


def write_summary_json(summaries, path):
    with open(path, "w") as fh:
        json.dump(summaries, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_curve_csv(curve, path, beta_name="entropy_beta"):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mean_reward", beta_name])
        for step, reward, beta in curve:
            writer.writerow([step, repr(reward), repr(beta)])
