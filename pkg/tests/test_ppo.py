import numpy as np
import pytest

from uavrrm import nn, ppo
from uavrrm.config import PPOConfig
from uavrrm.errors import TrainingError


@pytest.fixture
def tiny_policy(rng):
    return ppo.MultiHeadPolicy(state_dim=6, num_uavs=2, num_actions=4,
                               trunk_dims=(16, 8), critic_dims=(8,), rng=rng)


def test_gae_single_step_collapse():
    # terminal one-step episodes: advantage = r - V, return = r
    rewards = np.array([2.0, -1.0, 3.0])
    values = np.array([0.5, 0.5, 0.5])
    adv, ret = ppo.compute_gae(rewards, values, np.zeros(3), np.ones(3),
                               gamma=0.99, lam=0.97)
    assert np.allclose(adv, rewards - values)
    assert np.allclose(ret, rewards)


def test_gae_multi_step_reference():
    # hand-checked two-step chain, no terminals
    rewards = np.array([1.0, 1.0])
    values = np.array([0.0, 0.0])
    next_values = np.array([0.0, 0.0])
    gamma, lam = 0.9, 0.8
    adv, ret = ppo.compute_gae(rewards, values, next_values,
                               np.zeros(2), gamma, lam)
    # delta = [1, 1]; adv[1] = 1; adv[0] = 1 + 0.72 * 1
    assert adv[1] == pytest.approx(1.0)
    assert adv[0] == pytest.approx(1.72)
    assert np.allclose(ret, adv + values)


def test_entropy_coef_linear():
    cfg = PPOConfig(entropy_start=0.2, entropy_end=0.005, total_steps=100)
    assert ppo.entropy_coef(cfg, 0) == pytest.approx(0.2)
    assert ppo.entropy_coef(cfg, 100) == pytest.approx(0.005)
    assert ppo.entropy_coef(cfg, 50) == pytest.approx((0.2 + 0.005) / 2)


def test_act_shapes_and_logprob_consistency(tiny_policy, rng):
    state = rng.standard_normal(6)
    actions, logps, value = tiny_policy.act(state, rng=rng)
    assert actions.shape == (2,)
    assert np.all((actions >= 0) & (actions < 4))
    assert np.all(logps <= 0)
    logits_list, values = tiny_policy.logits_and_values(state)
    for m in range(2):
        expected = nn.log_softmax(logits_list[m][0])[actions[m]]
        assert logps[m] == pytest.approx(expected, rel=1e-12)
    assert value == pytest.approx(float(values[0]))


def test_act_batch_matches_single(tiny_policy, rng):
    states = rng.standard_normal((3, 6))
    a_b, lp_b, v_b = tiny_policy.act_batch(states, mode="greedy")
    for k in range(3):
        a, lp, v = tiny_policy.act(states[k], mode="greedy")
        assert np.array_equal(a, a_b[k])
        assert np.allclose(lp, lp_b[k])
        assert v == pytest.approx(float(v_b[k]))


def make_batch(policy, rng, size=16):
    states = rng.standard_normal((size, policy.state_dim))
    actions, logps, values = policy.act_batch(states, rng=rng)
    rewards = rng.standard_normal(size)
    adv, ret = ppo.compute_gae(rewards, values, np.zeros(size),
                               np.ones(size), 0.99, 0.97)
    return ppo.RolloutBatch(states=states, actions=actions, log_probs=logps,
                            rewards=rewards, values=values,
                            advantages=adv, returns=ret)


def test_ratio_is_one_before_first_update(tiny_policy, rng):
    batch = make_batch(tiny_policy, rng)
    cfg = PPOConfig(batch_size=16, num_minibatches=2, epochs=1)
    a_opt = nn.Adam(tiny_policy.actor_parameters(), lr=3e-4)
    c_opt = nn.Adam(tiny_policy.critic_parameters(), lr=3e-4)
    stats = ppo.ppo_update(tiny_policy, batch, cfg, a_opt, c_opt, beta=0.01,
                           rng=rng)
    assert stats["first_minibatch_max_ratio_err"] <= 1e-9


def test_advantage_normalization_stats(tiny_policy, rng):
    batch = make_batch(tiny_policy, rng)
    cfg = PPOConfig(batch_size=16, num_minibatches=2, epochs=1)
    a_opt = nn.Adam(tiny_policy.actor_parameters(), lr=3e-4)
    c_opt = nn.Adam(tiny_policy.critic_parameters(), lr=3e-4)
    stats = ppo.ppo_update(tiny_policy, batch, cfg, a_opt, c_opt, 0.01, rng)
    assert abs(stats["adv_mean"]) <= 1e-9
    assert abs(stats["adv_std"] - 1.0) <= 1e-6


def test_degenerate_advantages_raise(tiny_policy, rng):
    batch = make_batch(tiny_policy, rng)
    batch.advantages = np.full_like(batch.advantages, 2.0)
    cfg = PPOConfig(batch_size=16, num_minibatches=2, epochs=1)
    a_opt = nn.Adam(tiny_policy.actor_parameters(), lr=3e-4)
    c_opt = nn.Adam(tiny_policy.critic_parameters(), lr=3e-4)
    with pytest.raises(TrainingError):
        ppo.ppo_update(tiny_policy, batch, cfg, a_opt, c_opt, 0.01, rng)


def test_update_improves_surrogate_on_fixed_batch(tiny_policy, rng):
    # repeated updates on one batch should raise the chosen actions'
    # probability where advantages are positive
    batch = make_batch(tiny_policy, rng, size=32)
    cfg = PPOConfig(batch_size=32, num_minibatches=2, epochs=4)
    a_opt = nn.Adam(tiny_policy.actor_parameters(), lr=1e-3)
    c_opt = nn.Adam(tiny_policy.critic_parameters(), lr=1e-3)

    def joint_logp():
        logits_list, _ = tiny_policy.logits_and_values(batch.states)
        total = np.zeros(len(batch.rewards))
        for m, lg in enumerate(logits_list):
            total += nn.log_softmax(lg)[np.arange(len(batch.rewards)),
                                        batch.actions[:, m]]
        return total

    adv = batch.advantages
    adv = (adv - adv.mean()) / adv.std()
    before = float((joint_logp() * adv).mean())
    for _ in range(5):
        ppo.ppo_update(tiny_policy, batch, cfg, a_opt, c_opt, 0.0, rng)
    after = float((joint_logp() * adv).mean())
    assert after > before


def test_save_load_roundtrip(tmp_path, tiny_policy, rng):
    from uavrrm.env import StateNormalizer
    norm = StateNormalizer([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    path = tmp_path / "ppo.ckpt"
    ppo.save_policy(path, tiny_policy, norm, (2, 2, 2))
    loaded, norm2, shape = ppo.load_policy(path)
    assert shape == (2, 2, 2)
    assert np.array_equal(norm2.means, norm.means)
    states = rng.standard_normal((3, 6))
    a1, _, v1 = tiny_policy.act_batch(states, mode="greedy")
    a2, _, v2 = loaded.act_batch(states, mode="greedy")
    assert np.array_equal(a1, a2)
    assert np.allclose(v1, v2)


def test_load_rejects_wrong_kind(tmp_path, tiny_policy):
    from uavrrm.env import StateNormalizer
    path = tmp_path / "x.ckpt"
    nn.save_checkpoint(path, 2, [2, 2, 2, 6, 4, 2, 16, 8, 1, 8],
                       np.zeros(6), nn.flatten_params(tiny_policy.all_parameters()))
    with pytest.raises(TrainingError):
        ppo.load_policy(path)


def test_train_smoke_on_tiny_env(small_env):
    cfg = PPOConfig(total_steps=128, batch_size=32, num_minibatches=4,
                    epochs=2, eval_every=64, eval_scenarios=4, seed=1,
                    trunk_dims=(32, 16), critic_dims=(8,))
    policy, curve = ppo.train(small_env, cfg)
    assert curve[-1][0] == 128
    assert all(np.isfinite(r) for _, r, _ in curve)
    assert policy.num_actions == 8
