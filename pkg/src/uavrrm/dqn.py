"""Factorized multi-head DQN baseline.

Same trunk/head dimensions as the PPO agent (no critic). Episodes are
single-step and actions do not influence the next state, so the TD target
reduces to the immediate reward; the hard-synced target network is kept for
parity with the standard recipe even though targets never bootstrap.
"""

from dataclasses import dataclass
import math

import numpy as np

from .env import StateNormalizer
from .errors import TrainingError
from . import nn

CHECKPOINT_KIND_DQN = 2


def epsilon(t, schedule):
    """Cosine-annealed exploration rate."""
    frac = min(t, schedule.eps_decay_steps) / schedule.eps_decay_steps
    return schedule.eps_end + (schedule.eps_start - schedule.eps_end) / 2.0 * (
        1.0 + math.cos(math.pi * frac))


@dataclass
class EpsSchedule:
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_steps: int = 500_000


class ReplayBuffer:
    """Ring buffer of (state, joint action, reward) transitions."""

    def __init__(self, capacity, state_dim, num_uavs):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, num_uavs), dtype=int)
        self.rewards = np.zeros(capacity)
        self.size = 0
        self.cursor = 0

    def push(self, state, action, reward):
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        idx = rng.integers(0, self.size, size=batch_size)
        return self.states[idx], self.actions[idx], self.rewards[idx]


class MultiHeadQNet:
    """Shared trunk with one Q-value head per UAV."""

    def __init__(self, state_dim, num_uavs, num_actions,
                 trunk_dims=(1024, 512, 256, 128), rng=None):
        rng = rng or np.random.default_rng(0)
        self.state_dim = state_dim
        self.num_uavs = num_uavs
        self.num_actions = num_actions
        self.trunk_dims = tuple(trunk_dims)
        self.trunk = nn.mlp([state_dim, *trunk_dims], rng, final_gain=np.sqrt(2.0),
                            final_activation=True)
        self.heads = [nn.Dense(trunk_dims[-1], num_actions, rng, gain=0.01)
                      for _ in range(num_uavs)]

    def parameters(self):
        pairs = self.trunk.parameters()
        for head in self.heads:
            pairs.extend(head.parameters())
        return pairs

    def q_values(self, states):
        z = self.trunk.forward(np.atleast_2d(states))
        return [head.forward(z) for head in self.heads]

    def copy_from(self, other):
        for (p, _), (q, _) in zip(self.parameters(), other.parameters()):
            p[...] = q


def greedy_action(q_rows):
    """Argmax with lowest-index tie-break (np.argmax already does that)."""
    return int(np.argmax(q_rows))


def act_eps_greedy(qnet, state, eps, rng):
    """Per head: uniform random with probability eps, else greedy."""
    q_list = qnet.q_values(np.asarray(state, dtype=float))
    actions = np.zeros(qnet.num_uavs, dtype=int)
    for m, q in enumerate(q_list):
        if rng.random() < eps:
            actions[m] = int(rng.integers(0, qnet.num_actions))
        else:
            actions[m] = greedy_action(q[0])
    return actions


def act_greedy_batch(qnet, states):
    q_list = qnet.q_values(states)
    return np.stack([np.argmax(q, axis=1) for q in q_list], axis=1)


def dqn_update(qnet, optimizer, states, actions, rewards):
    """Per-head MSE on the taken action's Q-value against the reward target."""
    n = len(rewards)
    z = qnet.trunk.forward(states)
    rows = np.arange(n)
    optimizer.zero_grads()
    loss = 0.0
    dz = np.zeros_like(z)
    for m, head in enumerate(qnet.heads):
        q = head.forward(z)
        err = q[rows, actions[:, m]] - rewards
        loss += float((err ** 2).mean())
        dlogits = np.zeros_like(q)
        dlogits[rows, actions[:, m]] = 2.0 * err / (n * qnet.num_uavs)
        dz += head.backward(dlogits)
    loss /= qnet.num_uavs
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite DQN loss: {loss}")
    qnet.trunk.backward(dz)
    optimizer.step()
    return loss


def train(env, cfg, rng=None, curve_callback=None):
    """Epsilon-greedy collection with replay; returns (qnet, curve)."""
    if len(env) == 0:
        raise TrainingError("cannot train on an empty dataset")
    rng = rng or np.random.default_rng(cfg.seed)
    m, l, n = env.shape
    qnet = MultiHeadQNet(env.state_dim, m, l * n, trunk_dims=cfg.trunk_dims, rng=rng)
    target = MultiHeadQNet(env.state_dim, m, l * n, trunk_dims=cfg.trunk_dims,
                           rng=np.random.default_rng(0))
    target.copy_from(qnet)
    optimizer = nn.Adam(qnet.parameters(), lr=cfg.lr)
    buffer = ReplayBuffer(cfg.buffer_capacity, env.state_dim, m)

    all_states = np.stack([env.state(i) for i in range(len(env))])
    eval_idx = np.arange(min(cfg.eval_scenarios, len(env)))
    schedule = EpsSchedule(cfg.eps_start, cfg.eps_end, cfg.eps_decay_steps)

    curve = []
    learner_steps = 0
    next_eval = 0
    for t in range(cfg.total_steps):
        i = int(rng.integers(0, len(env)))
        state = all_states[i]
        action = act_eps_greedy(qnet, state, epsilon(t, schedule), rng)
        reward = env.step(i, action).reward
        buffer.push(state, action, reward)

        if buffer.size >= cfg.min_fill and (t + 1) % cfg.update_every == 0:
            states, actions, rewards = buffer.sample(cfg.batch_size, rng)
            dqn_update(qnet, optimizer, states, actions, rewards)
            learner_steps += 1
            if learner_steps % cfg.target_sync_every == 0:
                target.copy_from(qnet)

        if t + 1 >= next_eval or t + 1 == cfg.total_steps:
            acts = act_greedy_batch(qnet, all_states[eval_idx])
            mean_r = float(np.mean([env.step(int(j), acts[k]).reward
                                    for k, j in enumerate(eval_idx)]))
            curve.append((t + 1, mean_r, epsilon(t, schedule)))
            if curve_callback:
                curve_callback(t + 1, mean_r, epsilon(t, schedule))
            next_eval += cfg.eval_every
    return qnet, curve


# ---------------------------------------------------------------------------
# persistence (shares the checkpoint container with the PPO policy)

def save_qnet(path, qnet, normalizer, env_shape):
    dims = [*env_shape, qnet.state_dim, qnet.num_actions,
            len(qnet.trunk_dims), *qnet.trunk_dims]
    norm = np.concatenate([normalizer.means, normalizer.stds])
    nn.save_checkpoint(path, CHECKPOINT_KIND_DQN, dims, norm,
                       nn.flatten_params(qnet.parameters()))


def load_qnet(path):
    kind, dims, norm, flat = nn.load_checkpoint(path)
    if kind != CHECKPOINT_KIND_DQN:
        raise TrainingError(f"checkpoint kind {kind} is not a DQN network")
    m, l, n, state_dim, num_actions = dims[:5]
    n_trunk = dims[5]
    trunk = dims[6:6 + n_trunk]
    qnet = MultiHeadQNet(state_dim, m, num_actions, trunk_dims=trunk,
                         rng=np.random.default_rng(0))
    nn.load_into_params(qnet.parameters(), flat)
    normalizer = StateNormalizer(norm[:3], norm[3:])
    return qnet, normalizer, (m, l, n)
