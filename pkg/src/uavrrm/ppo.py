"""Multi-head PPO agent for joint UAV-BS-beam association.

Shared ReLU trunk, one linear actor head per UAV over the flat BS-beam
action space, and a small critic MLP reading the trunk output. Episodes are
single-step (one decision per scenario, terminal immediately), so GAE
collapses to advantage = reward - value and return = reward.

Per-UAV head log-probabilities are summed into one joint log-probability
before the clipped-ratio computation; actor and critic have separate Adam
optimizers, and the critic loss does not propagate into the shared trunk
(the trunk belongs to the actor parameter set).
"""

from dataclasses import dataclass

import numpy as np

from .env import StateNormalizer
from .errors import TrainingError
from . import nn

CHECKPOINT_KIND_PPO = 1


@dataclass
class RolloutBatch:
    states: np.ndarray       # (B, state_dim), normalized
    actions: np.ndarray      # (B, M) flat BS-beam indices
    log_probs: np.ndarray    # (B, M) per-head log pi(a_m | s)
    rewards: np.ndarray      # (B,)
    values: np.ndarray       # (B,)
    advantages: np.ndarray = None
    returns: np.ndarray = None


def compute_gae(rewards, values, next_values, terminals, gamma, lam):
    """Generalized advantage estimation over a time-ordered batch."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    next_values = np.asarray(next_values, dtype=float)
    not_term = 1.0 - np.asarray(terminals, dtype=float)
    deltas = rewards + gamma * next_values * not_term - values
    advantages = np.zeros_like(deltas)
    acc = 0.0
    for t in range(len(deltas) - 1, -1, -1):
        acc = deltas[t] + gamma * lam * not_term[t] * acc
        advantages[t] = acc
    return advantages, advantages + values


def entropy_coef(cfg, step):
    """Linear anneal of the entropy bonus over the training budget."""
    frac = min(max(step / cfg.total_steps, 0.0), 1.0)
    return cfg.entropy_start + (cfg.entropy_end - cfg.entropy_start) * frac


class MultiHeadPolicy:
    """Trunk + M actor heads + critic, all float64."""

    def __init__(self, state_dim, num_uavs, num_actions,
                 trunk_dims=(1024, 512, 256, 128), critic_dims=(64, 32), rng=None):
        rng = rng or np.random.default_rng(0)
        self.state_dim = state_dim
        self.num_uavs = num_uavs
        self.num_actions = num_actions
        self.trunk_dims = tuple(trunk_dims)
        self.critic_dims = tuple(critic_dims)
        self.trunk = nn.mlp([state_dim, *trunk_dims], rng, final_gain=np.sqrt(2.0),
                            final_activation=True)
        self.heads = [nn.Dense(trunk_dims[-1], num_actions, rng, gain=0.01)
                      for _ in range(num_uavs)]
        self.critic = nn.mlp([trunk_dims[-1], *critic_dims, 1], rng, final_gain=1.0)

    # parameter groups -----------------------------------------------------
    def actor_parameters(self):
        pairs = self.trunk.parameters()
        for head in self.heads:
            pairs.extend(head.parameters())
        return pairs

    def critic_parameters(self):
        return self.critic.parameters()

    def all_parameters(self):
        return self.actor_parameters() + self.critic_parameters()

    # forward passes -------------------------------------------------------
    def features(self, states):
        return self.trunk.forward(states)

    def head_logits(self, features):
        return [head.forward(features) for head in self.heads]

    def values(self, features):
        return self.critic.forward(features)[:, 0]

    def logits_and_values(self, states):
        z = self.features(np.atleast_2d(states))
        return self.head_logits(z), self.values(z)

    def act(self, state, rng=None, mode="sample"):
        """One decision: returns (actions (M,), per-head log-probs, value)."""
        logits_list, values = self.logits_and_values(np.asarray(state, dtype=float))
        actions = np.zeros(self.num_uavs, dtype=int)
        logps = np.zeros(self.num_uavs)
        for m, logits in enumerate(logits_list):
            row = logits[0]
            if not np.all(np.isfinite(row)):
                raise TrainingError(f"non-finite logits in actor head {m}")
            logp = nn.log_softmax(row)
            if mode == "greedy":
                a = int(np.argmax(row))
            else:
                a = nn.sample_categorical(np.exp(logp), rng)
            actions[m] = a
            logps[m] = logp[a]
        return actions, logps, float(values[0])

    def act_batch(self, states, rng=None, mode="sample"):
        """Vectorized act over a batch of states (rows)."""
        logits_list, values = self.logits_and_values(states)
        batch = states.shape[0]
        actions = np.zeros((batch, self.num_uavs), dtype=int)
        logps = np.zeros((batch, self.num_uavs))
        for m, logits in enumerate(logits_list):
            if not np.all(np.isfinite(logits)):
                raise TrainingError(f"non-finite logits in actor head {m}")
            logp = nn.log_softmax(logits)
            if mode == "greedy":
                a = np.argmax(logits, axis=1)
            else:
                a = nn.sample_categorical(np.exp(logp), rng)
            actions[:, m] = a
            logps[:, m] = logp[np.arange(batch), a]
        return actions, logps, values


def _actor_backward(policy, features_grad_per_head):
    """Push per-head logit gradients through heads and the trunk."""
    dz = None
    for head, dlogits in zip(policy.heads, features_grad_per_head):
        g = head.backward(dlogits)
        dz = g if dz is None else dz + g
    policy.trunk.backward(dz)


def ppo_update(policy, batch, cfg, actor_opt, critic_opt, beta, rng):
    """K epochs of clipped-surrogate minibatch updates; returns statistics."""
    b = len(batch.rewards)
    adv = batch.advantages
    mean, std = adv.mean(), adv.std()
    if std == 0.0:
        raise TrainingError("degenerate advantage batch (zero variance)")
    adv = (adv - mean) / std
    old_joint_logp = batch.log_probs.sum(axis=1)
    mb_size = b // cfg.num_minibatches if b >= cfg.num_minibatches else b

    stats = {"actor_loss": 0.0, "critic_loss": 0.0, "entropy": 0.0,
             "first_minibatch_max_ratio_err": None, "n_minibatches": 0,
             "adv_mean": float(adv.mean()), "adv_std": float(adv.std())}

    for _epoch in range(cfg.epochs):
        order = rng.permutation(b)
        for start in range(0, b - mb_size + 1, mb_size):
            idx = order[start:start + mb_size]
            states = batch.states[idx]
            actions = batch.actions[idx]
            a_mb = adv[idx]
            ret_mb = batch.returns[idx]
            old_mb = old_joint_logp[idx]
            n = len(idx)

            z = policy.features(states)
            logits_list = policy.head_logits(z)
            logp_list = [nn.log_softmax(lg) for lg in logits_list]
            probs_list = [np.exp(lp) for lp in logp_list]
            rows = np.arange(n)
            joint_logp = np.zeros(n)
            ent_per_head = []
            for m in range(policy.num_uavs):
                joint_logp += logp_list[m][rows, actions[:, m]]
                ent_per_head.append(nn.entropy(probs_list[m]))
            mean_entropy = np.mean(ent_per_head, axis=0)  # (n,)

            ratio = np.exp(joint_logp - old_mb)
            if stats["first_minibatch_max_ratio_err"] is None:
                stats["first_minibatch_max_ratio_err"] = float(
                    np.max(np.abs(ratio - 1.0)))
            surr1 = ratio * a_mb
            surr2 = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a_mb
            surrogate = np.minimum(surr1, surr2)
            actor_objective = surrogate.mean() + beta * mean_entropy.mean()
            actor_loss = -actor_objective
            if not np.isfinite(actor_loss):
                raise TrainingError(f"non-finite actor loss: {actor_loss}")

            # d(-J)/d(joint log-prob): active only where the unclipped branch
            # is selected by the min
            glogp = np.where(surr1 <= surr2, ratio * a_mb, 0.0) / n

            actor_opt.zero_grads()
            head_grads = []
            for m in range(policy.num_uavs):
                p = probs_list[m]
                onehot = np.zeros_like(p)
                onehot[rows, actions[:, m]] = 1.0
                dlogits = -glogp[:, None] * (onehot - p)
                # entropy bonus: dH/dlogits = -p * (log p + H)
                ent = ent_per_head[m]
                dlogits += (beta / (policy.num_uavs * n)) * (
                    p * (logp_list[m] + ent[:, None]))
                head_grads.append(dlogits)
            _actor_backward(policy, head_grads)
            actor_opt.step()

            # critic on its own optimizer; trunk features are treated as
            # fixed inputs (recomputed post actor step)
            z = policy.features(states)
            values = policy.critic.forward(z)
            err = values[:, 0] - ret_mb
            critic_loss = float((err ** 2).mean())
            if not np.isfinite(critic_loss):
                raise TrainingError(f"non-finite critic loss: {critic_loss}")
            critic_opt.zero_grads()
            policy.critic.backward((2.0 * err / n)[:, None])
            critic_opt.step()

            stats["actor_loss"] += float(actor_loss)
            stats["critic_loss"] += critic_loss
            stats["entropy"] += float(mean_entropy.mean())
            stats["n_minibatches"] += 1

    for key in ("actor_loss", "critic_loss", "entropy"):
        stats[key] /= max(stats["n_minibatches"], 1)
    return stats


def evaluate_mean_reward(policy, env, indices, states=None, mode="greedy", rng=None):
    states = states if states is not None else np.stack(
        [env.state(i) for i in indices])
    actions, _, _ = policy.act_batch(states, rng=rng, mode=mode)
    return float(np.mean([env.step(int(i), actions[k]).reward
                          for k, i in enumerate(indices)]))


def train(env, cfg, rng=None, curve_callback=None):
    """Train a MultiHeadPolicy on the environment's scenario set.

    Scenarios are sampled with replacement; the entropy coefficient anneals
    linearly over the step budget. Returns (policy, curve) where curve rows
    are (step, mean_reward, entropy_beta).
    """
    if len(env) == 0:
        raise TrainingError("cannot train on an empty dataset")
    rng = rng or np.random.default_rng(cfg.seed)
    m, l, n = env.shape
    policy = MultiHeadPolicy(env.state_dim, m, l * n,
                             trunk_dims=cfg.trunk_dims, critic_dims=cfg.critic_dims,
                             rng=rng)
    actor_opt = nn.Adam(policy.actor_parameters(), lr=cfg.lr)
    critic_opt = nn.Adam(policy.critic_parameters(), lr=cfg.lr)

    all_states = np.stack([env.state(i) for i in range(len(env))])
    eval_idx = np.arange(min(cfg.eval_scenarios, len(env)))
    eval_states = all_states[eval_idx]

    curve = []
    steps_done = 0
    next_eval = 0
    while steps_done < cfg.total_steps:
        batch_size = min(cfg.batch_size, cfg.total_steps - steps_done)
        idx = rng.integers(0, len(env), size=batch_size)
        states = all_states[idx]
        actions, logps, values = policy.act_batch(states, rng=rng, mode="sample")
        rewards = np.array([env.step(int(i), actions[k])
                            .reward for k, i in enumerate(idx)])
        # single-step terminal episodes: A = r - V, return = r
        advantages, returns = compute_gae(
            rewards, values, np.zeros_like(values), np.ones_like(values),
            cfg.gamma, cfg.lam)
        batch = RolloutBatch(states=states, actions=actions, log_probs=logps,
                             rewards=rewards, values=values,
                             advantages=advantages, returns=returns)
        beta = entropy_coef(cfg, steps_done)
        ppo_update(policy, batch, cfg, actor_opt, critic_opt, beta, rng)
        steps_done += batch_size

        if steps_done >= next_eval or steps_done >= cfg.total_steps:
            mean_r = evaluate_mean_reward(policy, env, eval_idx, states=eval_states)
            curve.append((steps_done, mean_r, beta))
            if curve_callback:
                curve_callback(steps_done, mean_r, beta)
            next_eval += cfg.eval_every
    return policy, curve


# ---------------------------------------------------------------------------
# persistence

def save_policy(path, policy, normalizer, env_shape):
    dims = [*env_shape, policy.state_dim, policy.num_actions,
            len(policy.trunk_dims), *policy.trunk_dims,
            len(policy.critic_dims), *policy.critic_dims]
    norm = np.concatenate([normalizer.means, normalizer.stds])
    nn.save_checkpoint(path, CHECKPOINT_KIND_PPO, dims, norm,
                       nn.flatten_params(policy.all_parameters()))


def load_policy(path):
    kind, dims, norm, flat = nn.load_checkpoint(path)
    if kind != CHECKPOINT_KIND_PPO:
        raise TrainingError(f"checkpoint kind {kind} is not a PPO policy")
    m, l, n, state_dim, num_actions = dims[:5]
    n_trunk = dims[5]
    trunk = dims[6:6 + n_trunk]
    n_critic = dims[6 + n_trunk]
    critic = dims[7 + n_trunk:7 + n_trunk + n_critic]
    policy = MultiHeadPolicy(state_dim, m, num_actions,
                             trunk_dims=trunk, critic_dims=critic,
                             rng=np.random.default_rng(0))
    nn.load_into_params(policy.all_parameters(), flat)
    normalizer = StateNormalizer(norm[:3], norm[3:])
    return policy, normalizer, (m, l, n)
