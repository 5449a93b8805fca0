# Copyright (c) 2021-2024  The University of Texas Southwestern Medical Center.
# All rights reserved.

# Redistribution and use in source and binary forms, with or without
# modification, are permitted for academic and research use only (subject to the
# limitations in the disclaimer below) provided that the following conditions are met:

#      * Redistributions of source code must retain the above copyright notice,
#      this list of conditions and the following disclaimer.

#      * Redistributions in binary form must reproduce the above copyright
#      notice, this list of conditions and the following disclaimer in the
#      documentation and/or other materials provided with the distribution.

#      * Neither the name of the copyright holders nor the names of its
#      contributors may be used to endorse or promote products derived from this
#      software without specific prior written permission.

# NO EXPRESS OR IMPLIED LICENSES TO ANY PARTY'S PATENT RIGHTS ARE GRANTED BY
# THIS LICENSE. THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND
# CONTRIBUTORS "AS IS" AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT
# LIMITED TO, THE IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A
# PARTICULAR PURPOSE ARE DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR
# CONTRIBUTORS BE LIABLE FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL,
# EXEMPLARY, OR CONSEQUENTIAL DAMAGES (INCLUDING, BUT NOT LIMITED TO,
# PROCUREMENT OF SUBSTITUTE GOODS OR SERVICES; LOSS OF USE, DATA, OR PROFITS; OR
# BUSINESS INTERRUPTION) HOWEVER CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER
# IN CONTRACT, STRICT LIABILITY, OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE)
# ARISING IN ANY WAY OUT OF THE USE OF THIS SOFTWARE, EVEN IF ADVISED OF THE
# POSSIBILITY OF SUCH DAMAGE.

# Standard Library Imports
import math
from dataclasses import replace

# Third Party Imports
import numpy as np
import pytest
import yaml

# Local Imports
from dtsync.model.autodiff import ParamSet, forward, mac_count
from dtsync.model.environment import ACTION_EPS, SyncEnvironment
from dtsync.model.replay_buffer import Batch
from dtsync.model.sac import (
    HALF_LOG_2PI,
    ActionOverride,
    SacHyperparameters,
    actor_loss_and_gradient,
    actor_update,
    alpha_gradient,
    apply_alpha_gradient,
    create_agent,
    critic_update,
    load_agent,
    network_specs,
    policy_sample,
    q_values,
    sample_actions,
    save_agent,
    soft_target,
    target_sync,
    train,
    training_complexity,
    update_agent,
)
from dtsync.model.simcore import SystemConfig
from dtsync.tools.exceptions import (
    CheckpointError,
    ConfigError,
    ContractViolation,
    TrainingDivergedError,
)

HYPER = SacHyperparameters(hidden_width=16, learning_rate=1e-2)


def make_agent(state_size=2, action_size=2, seed=0, hyper=HYPER, override=None):
    return create_agent(state_size, action_size, hyper, np.random.default_rng(seed), override)


def make_batch(state_size=2, action_size=2, size=32, seed=1, done=0.0) -> Batch:
    rng = np.random.default_rng(seed)
    states = rng.uniform(-1, 1, (size, state_size))
    actions = rng.uniform(-0.9, 0.9, (size, action_size))
    return Batch(
        states=states,
        actions=actions,
        rewards=0.5 * states[:, 0] - 0.3 * actions[:, 0],
        next_states=rng.uniform(-1, 1, (size, state_size)),
        dones=np.full(size, done),
    )


def zero_policy(agent):
    agent.policy = ParamSet.zeros(agent.policy.spec)
    return agent


def test_log_prob_at_the_mode():
    agent = zero_policy(make_agent(1, 1))
    raw, log_prob = policy_sample(np.zeros(1), agent, deterministic=True)
    assert raw[0] == 0.0
    assert log_prob == pytest.approx(-HALF_LOG_2PI - math.log(1 + 1e-6), abs=1e-12)
    assert log_prob == pytest.approx(-0.9189, abs=1e-4)


def test_deterministic_mode_returns_the_squashed_mean():
    agent = make_agent(3, 4)
    state = np.array([0.3, -0.2, 0.9])
    mean = forward(agent.policy, state)[:4]
    raw, _ = policy_sample(state, agent, deterministic=True)
    np.testing.assert_allclose(raw, np.tanh(mean), atol=1e-15)


def test_squashed_gaussian_entropy_matches_integration():
    agent = zero_policy(make_agent(1, 1))
    sample = sample_actions(agent, np.zeros((100_000, 1)), rng=np.random.default_rng(0))
    monte_carlo = float(np.mean(-sample.log_prob))

    u = np.linspace(-12.0, 12.0, 200_001)
    density = np.exp(-0.5 * u * u - HALF_LOG_2PI)
    correction = np.sum(density * np.log(1.0 - np.tanh(u) ** 2 + 1e-6)) * (u[1] - u[0])
    integrated = 0.5 * math.log(2 * math.pi * math.e) + correction
    assert integrated == pytest.approx(0.670, abs=0.005)
    assert monte_carlo == pytest.approx(integrated, abs=0.01)


def test_log_prob_is_finite_for_extreme_states():
    agent = make_agent(2, 3)
    agent.policy.weights[-1] *= 1e4
    sample = sample_actions(agent, np.array([[50.0, -50.0], [0.0, 0.0]]), rng=np.random.default_rng(0))
    assert np.all(np.isfinite(sample.log_prob))
    assert np.all(np.abs(sample.action) < 1.0)


def test_override_pins_entries_and_drops_them_from_the_density():
    override = ActionOverride(indices=(0,), values=(1.0 - ACTION_EPS,))
    agent = make_agent(2, 2, override=override)
    assert agent.target_entropy == -1.0
    sample = sample_actions(agent, np.zeros((5, 2)), rng=np.random.default_rng(0))
    assert np.all(sample.action[:, 0] == 1.0 - ACTION_EPS)
    free = make_agent(2, 2)
    free.policy = agent.policy
    unpinned = sample_actions(free, np.zeros((5, 2)), noise=sample.noise)
    per_dim = (
        -0.5 * sample.noise[:, 1] ** 2
        - sample.log_std[:, 1]
        - HALF_LOG_2PI
        - np.log(1 - np.tanh(sample.pre_squash[:, 1]) ** 2 + 1e-6)
    )
    np.testing.assert_allclose(sample.log_prob, per_dim)
    assert np.all(unpinned.log_prob != sample.log_prob)


def test_randomized_entries_are_redrawn_and_drop_out_of_the_density():
    override = ActionOverride(indices=(0, 1), randomized=True)
    agent = make_agent(2, 4, override=override)
    assert agent.target_entropy == -2.0
    noise = np.random.default_rng(5).standard_normal((2000, 4))
    sample = sample_actions(agent, np.zeros((2000, 2)), noise=noise, rng=np.random.default_rng(0))
    drawn = sample.action[:, :2]
    assert np.all(np.abs(drawn) < 1.0)
    assert abs(drawn.mean()) < 0.05
    assert drawn.min() < -0.9 and drawn.max() > 0.9
    np.testing.assert_array_equal(sample.action[:, 2:], np.tanh(sample.pre_squash[:, 2:]))

    plain = make_agent(2, 4, override=ActionOverride(indices=(0, 1), values=(0.0, 0.0)))
    plain.policy = agent.policy
    pinned = sample_actions(plain, np.zeros((2000, 2)), noise=noise)
    np.testing.assert_array_equal(sample.log_prob, pinned.log_prob)


def test_randomized_entries_need_a_generator():
    override = ActionOverride(indices=(0,), randomized=True)
    with pytest.raises(ContractViolation):
        override.apply(np.zeros(3))
    agent = make_agent(2, 2, override=override)
    with pytest.raises(ContractViolation):
        policy_sample(np.zeros(2), agent, deterministic=True)
    raw, _ = policy_sample(np.zeros(2), agent, rng=np.random.default_rng(0), deterministic=True)
    assert raw[1] == pytest.approx(np.tanh(forward(agent.policy, np.zeros(2))[1]), abs=1e-15)


def test_actor_gradient_ignores_randomized_entries():
    override = ActionOverride(indices=(1,), randomized=True)
    agent = make_agent(2, 2, override=override)
    agent.log_alpha = math.log(0.2)
    states = np.random.default_rng(3).uniform(-1, 1, (16, 2))
    noise = np.random.default_rng(4).standard_normal((16, 2))
    _, grads, _ = actor_loss_and_gradient(states, agent, noise, np.random.default_rng(9))
    # rows 1 and 3 of the output layer drive the randomized mean and log-std
    np.testing.assert_array_equal(grads.weights[-1][[1, 3]], 0.0)
    np.testing.assert_array_equal(grads.biases[-1][[1, 3]], 0.0)
    assert np.any(grads.weights[-1][[0, 2]] != 0.0)


def test_terminal_and_undiscounted_targets_are_the_reward():
    agent = make_agent()
    done = make_batch(done=1.0)
    np.testing.assert_array_equal(soft_target(done, agent, np.random.default_rng(0), 0.99), done.rewards)
    batch = make_batch()
    np.testing.assert_array_equal(soft_target(batch, agent, np.random.default_rng(0), 0.0), batch.rewards)


def test_soft_target_matches_recomputation():
    agent = make_agent()
    agent.log_alpha = math.log(0.3)
    batch = make_batch(size=1)
    target = soft_target(batch, agent, np.random.default_rng(9), 0.9)
    following = sample_actions(agent, batch.next_states, rng=np.random.default_rng(9))
    q1 = q_values(agent.target1, batch.next_states, following.action)[0]
    q2 = q_values(agent.target2, batch.next_states, following.action)[0]
    expected = batch.rewards[0] + 0.9 * (min(q1, q2) - 0.3 * following.log_prob[0])
    assert target[0] == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_target_derivative_in_alpha():
    agent = make_agent()
    batch = make_batch()
    batch.dones[::2] = 1.0
    agent.log_alpha = math.log(0.2)
    low = soft_target(batch, agent, np.random.default_rng(4), 0.99)
    agent.log_alpha = math.log(0.7)
    high = soft_target(batch, agent, np.random.default_rng(4), 0.99)
    log_prob = sample_actions(agent, batch.next_states, rng=np.random.default_rng(4)).log_prob
    np.testing.assert_allclose(
        (high - low) / 0.5, -0.99 * (1 - batch.dones) * log_prob, rtol=1e-9, atol=1e-12
    )


def test_critic_loss_is_zero_on_its_own_predictions():
    agent = make_agent()
    agent.critic2 = agent.critic1.copy()
    batch = make_batch()
    batch.rewards = q_values(agent.critic1, batch.states, batch.actions)
    before = agent.critic1.flat()
    losses = critic_update(batch, agent, np.random.default_rng(0), 0.0)
    assert losses == (0.0, 0.0)
    np.testing.assert_array_equal(agent.critic1.flat(), before)


def test_critic_loss_of_a_constant_offset():
    agent = make_agent()
    agent.critic2 = agent.critic1.copy()
    batch = make_batch()
    batch.rewards = q_values(agent.critic1, batch.states, batch.actions) - 0.25
    loss1, loss2 = critic_update(batch, agent, np.random.default_rng(0), 0.0)
    assert loss1 == pytest.approx(0.25**2 / 2, rel=1e-9)
    assert loss2 == pytest.approx(loss1, rel=1e-12)


def test_critic_regresses_onto_fixed_targets():
    agent = make_agent()
    batch = make_batch()
    rng = np.random.default_rng(0)
    for _ in range(1000):
        loss1, loss2 = critic_update(batch, agent, rng, 0.0)
    assert max(loss1, loss2) < 1e-3


def constant_critics(agent):
    """Critics that ignore the action columns."""
    state_size = agent.state_size
    for name in ("critic1", "critic2"):
        critic = getattr(agent, name)
        critic.weights[0][:, state_size:] = 0.0
    return agent


def test_flat_objective_gives_no_policy_gradient():
    agent = constant_critics(make_agent())
    agent.log_alpha = -math.inf
    batch = make_batch()
    noise = np.random.default_rng(0).standard_normal(batch.actions.shape)
    _, grads, _ = actor_loss_and_gradient(batch.states, agent, noise)
    assert not np.any(grads.flat())


def test_actor_gradient_matches_finite_differences():
    agent = make_agent(seed=3)
    agent.log_alpha = math.log(0.2)
    agent.policy.weights[-1] *= 30.0
    batch = make_batch(size=16)
    noise = np.random.default_rng(5).standard_normal(batch.actions.shape)
    _, grads, _ = actor_loss_and_gradient(batch.states, agent, noise)
    theta = agent.policy.flat()
    spec = agent.policy.spec
    analytic = grads.flat()

    def loss_at(flat):
        agent.policy = ParamSet.from_flat(spec, flat)
        loss, _, _ = actor_loss_and_gradient(batch.states, agent, noise)
        return loss

    rng = np.random.default_rng(6)
    h = 1e-6
    for _ in range(5):
        direction = rng.standard_normal(theta.size)
        direction /= np.linalg.norm(direction)
        numeric = (loss_at(theta + h * direction) - loss_at(theta - h * direction)) / (2 * h)
        exact = float(analytic @ direction)
        assert abs(numeric - exact) <= 1e-3 * max(abs(exact), abs(numeric), 1e-4)


def test_actor_climbs_a_one_dimensional_bandit():
    hyper = SacHyperparameters(hidden_width=8, learning_rate=1e-3)
    agent = make_agent(1, 1, seed=2, hyper=hyper)
    agent.log_alpha = -math.inf
    # Q(s, a) = -|a - 0.5|
    peak = ParamSet(
        weights=[np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([[-1.0, -1.0]])],
        biases=[np.array([-0.5, 0.5]), np.zeros(1)],
    )
    agent.critic1, agent.critic2 = peak, peak.copy()
    batch = Batch(
        states=np.ones((64, 1)),
        actions=np.zeros((64, 1)),
        rewards=np.zeros(64),
        next_states=np.ones((64, 1)),
        dones=np.ones(64),
    )
    rng = np.random.default_rng(0)
    for _ in range(3000):
        actor_update(batch, agent, rng)
    raw, _ = policy_sample(np.ones(1), agent, deterministic=True)
    assert raw[0] == pytest.approx(0.5, abs=0.05)


def test_alpha_is_stationary_at_the_target_entropy():
    agent = make_agent()
    log_probs = np.full(32, -agent.target_entropy)
    assert alpha_gradient(log_probs, agent) == 0.0
    assert apply_alpha_gradient(0.0, agent) == 1.0


def test_alpha_grows_when_entropy_is_too_low():
    agent = make_agent()
    log_probs = np.full(32, 5.0)
    assert alpha_gradient(log_probs, agent) < 0
    assert apply_alpha_gradient(alpha_gradient(log_probs, agent), agent) > 1.0


def test_alpha_converges_under_a_fixed_entropy_policy():
    agent = make_agent(hyper=SacHyperparameters(hidden_width=16, learning_rate=1e-2))
    log_probs = np.full(32, -agent.target_entropy - 1e-3)
    for _ in range(5000):
        apply_alpha_gradient(alpha_gradient(log_probs, agent), agent)
    assert abs(alpha_gradient(log_probs, agent)) < 1e-4


def test_target_sync_schedule():
    agent = make_agent()
    batch = make_batch()
    rng = np.random.default_rng(0)
    original = agent.target1.flat()
    hyper = SacHyperparameters(hidden_width=16, learning_rate=1e-2, target_update_interval=320)
    for _ in range(319):
        update_agent(batch, agent, rng, hyper)
    np.testing.assert_array_equal(agent.target1.flat(), original)
    assert not np.array_equal(agent.critic1.flat(), original)

    before = soft_target(batch, agent, np.random.default_rng(1), 0.99)
    update_agent(batch, agent, rng, hyper)
    assert agent.gradient_steps == 320
    np.testing.assert_array_equal(agent.target1.flat(), agent.critic1.flat())
    np.testing.assert_array_equal(agent.target2.flat(), agent.critic2.flat())
    after = soft_target(batch, agent, np.random.default_rng(1), 0.99)
    assert not np.allclose(before, after)


def test_target_sync_only_on_multiples():
    agent = make_agent()
    agent.critic1.weights[0] += 1.0
    assert not target_sync(agent, 0)
    assert not target_sync(agent, 319)
    assert target_sync(agent, 640)
    np.testing.assert_array_equal(agent.target1.flat(), agent.critic1.flat())


def test_network_shapes_and_complexity():
    policy, critic = network_specs(4, 8, SacHyperparameters())
    assert policy.layer_sizes == (4, 256, 256, 16)
    assert critic.layer_sizes == (12, 256, 256, 1)
    assert training_complexity(policy, critic, 20, 5000) == 20 * 5000 * (
        mac_count(policy) + 2 * mac_count(critic)
    )


def test_invalid_hyperparameters():
    with pytest.raises(ConfigError):
        SacHyperparameters(gamma=1.5).validate()
    with pytest.raises(ConfigError):
        SacHyperparameters(batch_size=0).validate()
    with pytest.raises(ConfigError):
        SacHyperparameters(buffer_size=10, batch_size=20).validate()


def test_rollout_only_training(small_config, tiny_hyper):
    hyper = replace(tiny_hyper, updates_enabled=False)
    env = SyncEnvironment(small_config)
    params, logs = train(env, hyper, seed=0)
    assert params.gradient_steps == 0
    assert params.environment_steps == hyper.n_step
    assert len(logs) == hyper.n_step // small_config.num_slots
    assert all(math.isnan(log.critic_loss1) for log in logs)


def test_training_is_deterministic(small_config, tiny_hyper):
    first_params, first = train(SyncEnvironment(small_config), tiny_hyper, seed=4)
    second_params, second = train(SyncEnvironment(small_config), tiny_hyper, seed=4)
    assert [l.summary.total_reward for l in first] == [l.summary.total_reward for l in second]
    assert [l.critic_loss1 for l in first][1:] == [l.critic_loss1 for l in second][1:]
    np.testing.assert_array_equal(first_params.policy.flat(), second_params.policy.flat())
    assert first_params.gradient_steps == tiny_hyper.n_step - tiny_hyper.batch_size + 1


def test_non_finite_losses_abort_training(tiny_hyper):
    config = SystemConfig(num_uds=2, num_slots=5, penalty_w=1e307)
    with pytest.raises(TrainingDivergedError):
        train(SyncEnvironment(config), tiny_hyper, seed=0)


def test_agent_checkpoint_round_trip(tmp_path):
    override = ActionOverride(indices=(0, 1), values=(1.0 - ACTION_EPS,) * 2)
    agent = make_agent(4, 8, override=override)
    agent.log_alpha = -1.25
    agent.gradient_steps = 77
    save_agent(tmp_path / "agent", agent)
    loaded = load_agent(tmp_path / "agent", 4, 8, HYPER)
    assert loaded.log_alpha == -1.25
    assert loaded.gradient_steps == 77
    assert loaded.override == override
    assert loaded.target_entropy == agent.target_entropy
    for name in ("policy", "critic1", "critic2", "target1", "target2"):
        np.testing.assert_array_equal(getattr(loaded, name).flat(), getattr(agent, name).flat())


def test_agent_checkpoint_shape_mismatch(tmp_path):
    save_agent(tmp_path / "agent", make_agent(4, 8))
    with pytest.raises(CheckpointError):
        load_agent(tmp_path / "agent", 6, 12, HYPER)
    with pytest.raises(CheckpointError):
        load_agent(tmp_path / "missing", 4, 8, HYPER)


def test_randomized_override_survives_a_checkpoint(tmp_path):
    override = ActionOverride(indices=(0, 1), randomized=True)
    save_agent(tmp_path / "agent", make_agent(4, 8, override=override))
    loaded = load_agent(tmp_path / "agent", 4, 8, HYPER)
    assert loaded.override == override
    assert loaded.target_entropy == -6.0


@pytest.mark.parametrize(
    "edit",
    [
        lambda record: record.pop("log_alpha"),
        lambda record: record.update(gradient_steps="many"),
        lambda record: record.update(override={"indices": [0, 99], "values": [0.5, 0.5]}),
        lambda record: record.update(override={"indices": [0, 1], "values": [0.5]}),
        lambda record: record.update(override=[0, 1]),
    ],
)
def test_malformed_agent_state_is_a_checkpoint_error(tmp_path, edit):
    save_agent(tmp_path / "agent", make_agent(4, 8))
    path = tmp_path / "agent" / "agent_state.yml"
    record = yaml.safe_load(path.read_text())
    edit(record)
    path.write_text(yaml.safe_dump(record))
    with pytest.raises(CheckpointError):
        load_agent(tmp_path / "agent", 4, 8, HYPER)
