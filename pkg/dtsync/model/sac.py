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

"""Soft actor-critic with a squashed Gaussian policy and twin critics.

The policy network maps a state to 2A numbers: A means followed by A log
standard deviations. Critics take the concatenation of state and raw action.
Temperature is tuned automatically toward a target entropy and target critics
are hard copies refreshed every ``target_update_interval`` gradient steps.
"""

# Standard Library Imports
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

# Third Party Imports
import numpy as np
import yaml

# Local Imports
from dtsync.model.autodiff import (
    AdamState,
    MlpSpec,
    ParamSet,
    adam_step,
    adam_update,
    forward,
    gradients,
    init_params,
    load_params,
    mac_count,
    save_params,
)
from dtsync.model.dynamics import RngStream
from dtsync.model.environment import ACTION_EPS, EpisodeSummary, SyncEnvironment
from dtsync.model.replay_buffer import Batch, ReplayBuffer
from dtsync.tools.exceptions import (
    CheckpointError,
    ConfigError,
    ContractViolation,
    TrainingDivergedError,
)

logger = logging.getLogger(__name__)

#: float: Constant term 0.5 * ln(2 pi) of the Gaussian log-density.
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

#: float: Stabilizer inside the tanh change-of-variables term.
SQUASH_EPS = 1e-6

#: int: Version of the agent_state.yml record.
AGENT_STATE_VERSION = 1


@dataclass(frozen=True)
class SacHyperparameters:
    """Learning hyperparameters; defaults follow the published settings."""

    learning_rate: float = 1e-4
    n_epoch: int = 20
    n_step: int = 5000
    batch_size: int = 256
    buffer_size: int = 1_000_000
    gamma: float = 0.99
    hidden_width: int = 256
    hidden_layers: int = 2
    target_update_interval: int = 320
    #: float or None: Target entropy H0; None means minus the free action dimensions.
    target_entropy: Optional[float] = None
    #: float or None: Learner reward multiplier; None means 1 / K.
    reward_scale: Optional[float] = None
    initial_log_alpha: float = 0.0
    log_std_min: float = -20.0
    log_std_max: float = 2.0
    #: float: Scale of the initial last policy layer.
    policy_output_scale: float = 1e-2
    #: bool: False turns training into a pure rollout that only fills the buffer.
    updates_enabled: bool = True

    def validate(self) -> "SacHyperparameters":
        """Check ranges, raising ConfigError with the offending key."""
        for name in ("learning_rate", "policy_output_scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be strictly positive")
        for name in (
            "n_epoch",
            "n_step",
            "batch_size",
            "buffer_size",
            "hidden_width",
            "hidden_layers",
            "target_update_interval",
        ):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name}: must be a positive integer, got {value}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma: must lie in [0, 1], got {self.gamma}")
        if self.log_std_min >= self.log_std_max:
            raise ConfigError("log_std_min: must be below log_std_max")
        if self.buffer_size < self.batch_size:
            raise ConfigError("buffer_size: must hold at least one mini-batch")
        return self


@dataclass(frozen=True)
class ActionOverride:
    """Raw action entries the policy does not control.

    The entries are pinned to ``values``, or, when ``randomized`` is set,
    drawn uniformly on (-1, 1) afresh every time the override is applied.
    """

    indices: Tuple[int, ...]
    values: Tuple[float, ...] = ()
    randomized: bool = False

    def apply(self, raw: np.ndarray, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Return a copy of ``raw`` (one action or a batch) with the override applied.

        Raises
        ------
        ContractViolation
            If the entries are randomized and no generator is given.
        """
        pinned = np.array(raw, dtype=float, copy=True)
        index = list(self.indices)
        if self.randomized:
            if rng is None:
                raise ContractViolation("randomized action entries need a random generator")
            draw = rng.uniform(-1.0, 1.0, pinned[..., index].shape)
            pinned[..., index] = np.clip(draw, -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)
        else:
            pinned[..., index] = self.values
        return pinned

    def free_mask(self, action_size: int) -> np.ndarray:
        """Boolean mask of the entries the policy still controls."""
        mask = np.ones(action_size, dtype=bool)
        mask[list(self.indices)] = False
        return mask


@dataclass
class AgentParams:
    """Networks, temperature and optimizer state of a SAC agent."""

    policy: ParamSet
    critic1: ParamSet
    critic2: ParamSet
    target1: ParamSet
    target2: ParamSet
    log_alpha: float
    target_entropy: float
    policy_opt: AdamState
    critic1_opt: AdamState
    critic2_opt: AdamState
    alpha_opt: AdamState
    log_std_min: float = -20.0
    log_std_max: float = 2.0
    override: Optional[ActionOverride] = None
    gradient_steps: int = 0
    environment_steps: int = 0

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def action_size(self) -> int:
        return self.policy.spec.output_size // 2

    @property
    def state_size(self) -> int:
        return self.policy.spec.input_size

    @property
    def free_mask(self) -> np.ndarray:
        if self.override is None:
            return np.ones(self.action_size, dtype=bool)
        return self.override.free_mask(self.action_size)


def network_specs(state_size: int, action_size: int, hyper: SacHyperparameters):
    """Layer sizes of the policy and of each critic."""
    hidden = (hyper.hidden_width,) * hyper.hidden_layers
    policy = MlpSpec((state_size,) + hidden + (2 * action_size,))
    critic = MlpSpec((state_size + action_size,) + hidden + (1,))
    return policy, critic


def training_complexity(
    policy_spec: MlpSpec, critic_spec: MlpSpec, n_epoch: int, n_step: int
) -> int:
    """Order-of-growth multiply-accumulate count of a full training run."""
    return n_epoch * n_step * (mac_count(policy_spec) + 2 * mac_count(critic_spec))


def create_agent(
    state_size: int,
    action_size: int,
    hyper: SacHyperparameters,
    rng: np.random.Generator,
    override: Optional[ActionOverride] = None,
) -> AgentParams:
    """Initialize all networks, the temperature and the optimizers."""
    policy_spec, critic_spec = network_specs(state_size, action_size, hyper)
    policy = init_params(policy_spec, rng, output_scale=hyper.policy_output_scale)
    critic1 = init_params(critic_spec, rng)
    critic2 = init_params(critic_spec, rng)
    free = action_size if override is None else int(override.free_mask(action_size).sum())
    target_entropy = -float(free) if hyper.target_entropy is None else float(hyper.target_entropy)
    lr = hyper.learning_rate
    return AgentParams(
        policy=policy,
        critic1=critic1,
        critic2=critic2,
        target1=critic1.copy(),
        target2=critic2.copy(),
        log_alpha=float(hyper.initial_log_alpha),
        target_entropy=target_entropy,
        policy_opt=AdamState.create(policy_spec.num_params, lr=lr),
        critic1_opt=AdamState.create(critic_spec.num_params, lr=lr),
        critic2_opt=AdamState.create(critic_spec.num_params, lr=lr),
        alpha_opt=AdamState.create(1, lr=lr),
        log_std_min=hyper.log_std_min,
        log_std_max=hyper.log_std_max,
        override=override,
    )


@dataclass
class PolicySample:
    """Everything the actor update needs from one reparameterized draw."""

    mean: np.ndarray
    log_std: np.ndarray
    #: np.ndarray: Whether log_std sits strictly inside its clamp range.
    log_std_free: np.ndarray
    noise: np.ndarray
    pre_squash: np.ndarray
    squashed: np.ndarray
    #: np.ndarray: Executed raw action (clipped away from +-1, pins applied).
    action: np.ndarray
    log_prob: np.ndarray


def _policy_head(params: AgentParams, states: np.ndarray):
    out = forward(params.policy, states)
    size = params.action_size
    mean = out[:, :size]
    raw_log_std = out[:, size:]
    log_std = np.clip(raw_log_std, params.log_std_min, params.log_std_max)
    free = (raw_log_std > params.log_std_min) & (raw_log_std < params.log_std_max)
    return mean, log_std, free


def sample_actions(
    params: AgentParams,
    states: np.ndarray,
    noise: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    deterministic: bool = False,
) -> PolicySample:
    """Draw squashed Gaussian actions for a batch of states.

    Parameters
    ----------
    params : AgentParams
        Agent whose policy is sampled.
    states : np.ndarray
        (B, state_size) batch.
    noise : np.ndarray, optional
        Standard normal draws to use; drawn from ``rng`` when omitted.
    rng : numpy.random.Generator, optional
        Source of the noise.
    deterministic : bool
        Use the mean (zero noise) instead of a random draw.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    mean, log_std, free = _policy_head(params, states)
    std = np.exp(log_std)
    if deterministic:
        noise = np.zeros_like(mean)
    elif noise is None:
        noise = rng.standard_normal(mean.shape)
    pre_squash = mean + std * noise
    squashed = np.tanh(pre_squash)

    mask = params.free_mask
    per_dim = (
        -0.5 * noise * noise
        - log_std
        - HALF_LOG_2PI
        - np.log(1.0 - squashed * squashed + SQUASH_EPS)
    )
    log_prob = np.sum(per_dim[:, mask], axis=1)

    action = np.clip(squashed, -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)
    if params.override is not None:
        action = params.override.apply(action, rng)
    return PolicySample(
        mean=mean,
        log_std=log_std,
        log_std_free=free,
        noise=noise,
        pre_squash=pre_squash,
        squashed=squashed,
        action=action,
        log_prob=log_prob,
    )


def policy_sample(
    state, params: AgentParams, rng: Optional[np.random.Generator] = None, deterministic: bool = False
) -> Tuple[np.ndarray, float]:
    """Sample one raw action and its log-density for a single state."""
    sample = sample_actions(params, np.asarray(state)[None, :], rng=rng, deterministic=deterministic)
    return sample.action[0], float(sample.log_prob[0])


def _critic_input(states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return np.concatenate([states, actions], axis=1)


def q_values(critic: ParamSet, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Critic estimates for a batch, as a flat (B,) array."""
    return forward(critic, _critic_input(states, actions))[:, 0]


def soft_target(
    batch: Batch, params: AgentParams, rng: np.random.Generator, gamma: float
) -> np.ndarray:
    """Entropy-regularized Bellman targets using the twin target critics."""
    following = sample_actions(params, batch.next_states, rng=rng)
    q1 = q_values(params.target1, batch.next_states, following.action)
    q2 = q_values(params.target2, batch.next_states, following.action)
    soft_value = np.minimum(q1, q2) - params.alpha * following.log_prob
    return batch.rewards + gamma * (1.0 - batch.dones) * soft_value


def _check_finite(name: str, value: float, params: AgentParams) -> None:
    if not np.isfinite(value):
        raise TrainingDivergedError(
            f"{name} became non-finite after {params.gradient_steps} gradient steps "
            f"(alpha={params.alpha:.6g})"
        )


def critic_update(
    batch: Batch, params: AgentParams, rng: np.random.Generator, gamma: float
) -> Tuple[float, float]:
    """One Adam step on each critic toward the soft targets.

    Returns
    -------
    tuple
        The two mean half squared Bellman residuals before the step.
    """
    targets = soft_target(batch, params, rng, gamma)
    inputs = _critic_input(batch.states, batch.actions)
    count = len(batch)
    losses = []
    for name in ("critic1", "critic2"):
        critic = getattr(params, name)
        residual = forward(critic, inputs)[:, 0] - targets
        loss = float(np.mean(0.5 * residual * residual))
        _check_finite(f"{name} loss", loss, params)
        grads, _ = gradients(critic, inputs, residual[:, None] / count)
        setattr(params, name, adam_step(critic, grads, getattr(params, f"{name}_opt")))
        losses.append(loss)
    return losses[0], losses[1]


def actor_loss_and_gradient(
    states: np.ndarray,
    params: AgentParams,
    noise: np.ndarray,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, ParamSet, PolicySample]:
    """Actor objective mean(alpha * log pi - min Q) and its policy gradient.

    Gradients flow through the reparameterized action tanh(mu + sigma * noise)
    into both critics; overridden action entries carry no gradient. ``rng``
    feeds randomized overrides only.
    """
    sample = sample_actions(params, states, noise=noise, rng=rng)
    count = states.shape[0]
    alpha = params.alpha
    inputs = _critic_input(states, sample.action)
    q1 = forward(params.critic1, inputs)[:, 0]
    q2 = forward(params.critic2, inputs)[:, 0]
    first = (q1 <= q2).astype(float)
    q_min = np.minimum(q1, q2)
    loss = float(np.mean(alpha * sample.log_prob - q_min))

    _, grad_in1 = gradients(params.critic1, inputs, first[:, None])
    _, grad_in2 = gradients(params.critic2, inputs, (1.0 - first)[:, None])
    dq_da = (grad_in1 + grad_in2)[:, states.shape[1] :]

    free = params.free_mask.astype(float)
    a = sample.squashed
    slope = 1.0 - a * a
    dlogp_du = 2.0 * a * slope / (slope + SQUASH_EPS)
    dloss_du = (alpha * dlogp_du - dq_da * slope) * free / count
    dloss_dmean = dloss_du
    dloss_dlogstd = dloss_du * np.exp(sample.log_std) * sample.noise - alpha * free / count
    dloss_dlogstd = dloss_dlogstd * sample.log_std_free
    upstream = np.concatenate([dloss_dmean, dloss_dlogstd], axis=1)
    grads, _ = gradients(params.policy, states, upstream)
    return loss, grads, sample


def actor_update(batch: Batch, params: AgentParams, rng: np.random.Generator) -> float:
    """One Adam step on the policy; returns the loss before the step."""
    noise = rng.standard_normal((len(batch), params.action_size))
    loss, grads, _ = actor_loss_and_gradient(batch.states, params, noise, rng)
    _check_finite("actor loss", loss, params)
    params.policy = adam_step(params.policy, grads, params.policy_opt)
    return loss


def alpha_gradient(log_probs: np.ndarray, params: AgentParams) -> float:
    """Derivative of mean(-alpha * log pi - alpha * H0) with respect to log alpha."""
    return params.alpha * float(np.mean(-np.asarray(log_probs) - params.target_entropy))


def apply_alpha_gradient(grad: float, params: AgentParams) -> float:
    """Adam step on log alpha; returns the new alpha."""
    updated = adam_update(np.array([params.log_alpha]), np.array([grad]), params.alpha_opt)
    params.log_alpha = float(updated[0])
    return params.alpha


def alpha_update(batch: Batch, params: AgentParams, rng: np.random.Generator) -> float:
    """Tune the temperature toward the target entropy; returns the new alpha."""
    sample = sample_actions(params, batch.states, rng=rng)
    return apply_alpha_gradient(alpha_gradient(sample.log_prob, params), params)


def target_sync(params: AgentParams, step_counter: int, interval: int = 320) -> bool:
    """Hard-copy the critics into the targets every ``interval`` steps."""
    if step_counter > 0 and step_counter % interval == 0:
        params.target1 = params.critic1.copy()
        params.target2 = params.critic2.copy()
        return True
    return False


@dataclass
class UpdateStats:
    critic_loss1: float
    critic_loss2: float
    actor_loss: float
    alpha: float


def update_agent(
    batch: Batch, params: AgentParams, rng: np.random.Generator, hyper: SacHyperparameters
) -> UpdateStats:
    """Critic, actor and temperature updates followed by the target schedule."""
    loss1, loss2 = critic_update(batch, params, rng, hyper.gamma)
    actor_loss = actor_update(batch, params, rng)
    alpha = alpha_update(batch, params, rng)
    params.gradient_steps += 1
    target_sync(params, params.gradient_steps, hyper.target_update_interval)
    return UpdateStats(loss1, loss2, actor_loss, alpha)


class SacPolicy:
    """Policy handle acting with a trained or fresh agent."""

    def __init__(
        self,
        params: AgentParams,
        rng: Optional[np.random.Generator] = None,
        deterministic: bool = True,
    ):
        #: AgentParams: Agent parameters, read only.
        self.params = params

        #: numpy.random.Generator: Source of exploration noise.
        self.rng = rng

        #: bool: Act with the mean action.
        self.deterministic = deterministic

    def act(self, state) -> np.ndarray:
        raw, _ = policy_sample(state, self.params, rng=self.rng, deterministic=self.deterministic)
        return raw


@dataclass
class EpisodeLog:
    """Per-episode training record."""

    epoch: int
    step: int
    episode: int
    summary: EpisodeSummary
    alpha: float
    critic_loss1: float
    critic_loss2: float


class TrainingStreams(NamedTuple):
    """Independent random substreams of one training run."""

    init: RngStream
    act: RngStream
    update: RngStream
    episodes: RngStream


def training_streams(seed: int) -> TrainingStreams:
    """Split a root seed into the substreams used by :func:`train`."""
    return TrainingStreams(*RngStream(seed).spawn(4))


def next_episode_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**32))


def train(
    env: SyncEnvironment,
    hyper: SacHyperparameters,
    seed: int = 0,
    override: Optional[ActionOverride] = None,
    on_episode: Optional[Callable[[EpisodeLog], None]] = None,
    on_epoch: Optional[Callable[[int, AgentParams], None]] = None,
) -> Tuple[AgentParams, List[EpisodeLog]]:
    """Run the interleaved act / store / update loop.

    Parameters
    ----------
    env : SyncEnvironment
        Environment to train on; it is reset every N slots.
    hyper : SacHyperparameters
        Learning hyperparameters.
    seed : int
        Root seed of network initialization, exploration, batches and episodes.
    override : ActionOverride, optional
        Action entries pinned during both acting and learning.
    on_episode : callable, optional
        Called with each finished EpisodeLog.
    on_epoch : callable, optional
        Called with (epoch, params) after each epoch.

    Returns
    -------
    tuple
        Trained parameters and the per-episode log.

    Raises
    ------
    TrainingDivergedError
        If a loss or parameter update becomes non-finite.
    """
    hyper = hyper.validate()
    init_stream, act_stream, update_stream, episode_stream = training_streams(seed)
    params = create_agent(env.state_size, env.action_size, hyper, init_stream.generator, override)
    buffer = ReplayBuffer(env.state_size, env.action_size, hyper.buffer_size)
    scale = hyper.reward_scale if hyper.reward_scale is not None else 1.0 / env.config.num_uds

    policy_spec, critic_spec = network_specs(env.state_size, env.action_size, hyper)
    logger.info(
        "Training SAC: %d epochs x %d steps, ~%.3g multiply-accumulates",
        hyper.n_epoch,
        hyper.n_step,
        float(training_complexity(policy_spec, critic_spec, hyper.n_epoch, hyper.n_step)),
    )

    act_rng = act_stream.generator
    update_rng = update_stream.generator
    episode_rng = episode_stream.generator

    logs: List[EpisodeLog] = []
    state = env.reset(next_episode_seed(episode_rng))
    episode_index = 0
    losses: List[Tuple[float, float]] = []
    total_steps = 0
    for epoch in range(hyper.n_epoch):
        for step in range(hyper.n_step):
            raw, _ = policy_sample(state, params, rng=act_rng)
            transition = env.step(raw)
            buffer.add(
                transition.state,
                transition.raw_action,
                scale * transition.reward,
                transition.next_state,
                transition.done,
            )
            total_steps += 1
            params.environment_steps = total_steps

            if hyper.updates_enabled and len(buffer) >= hyper.batch_size:
                batch = buffer.sample(hyper.batch_size, update_rng)
                stats = update_agent(batch, params, update_rng, hyper)
                losses.append((stats.critic_loss1, stats.critic_loss2))

            if transition.done:
                loss1, loss2 = (
                    tuple(float(v) for v in np.mean(losses, axis=0)) if losses else (float("nan"),) * 2
                )
                record = EpisodeLog(
                    epoch=epoch,
                    step=total_steps,
                    episode=episode_index,
                    summary=env.episode,
                    alpha=params.alpha,
                    critic_loss1=loss1,
                    critic_loss2=loss2,
                )
                logs.append(record)
                if on_episode is not None:
                    on_episode(record)
                logger.debug(
                    "episode %d: return %.6g, mean latency %.6g s",
                    episode_index,
                    env.episode.total_reward,
                    env.episode.mean_latency,
                )
                episode_index += 1
                losses = []
                state = env.reset(next_episode_seed(episode_rng))
            else:
                state = transition.next_state

        recent = [log.summary.total_reward for log in logs[-10:]]
        logger.info(
            "epoch %d/%d: %d episodes, recent mean return %.6g, alpha %.4g",
            epoch + 1,
            hyper.n_epoch,
            episode_index,
            float(np.mean(recent)) if recent else float("nan"),
            params.alpha,
        )
        if on_epoch is not None:
            on_epoch(epoch, params)
    return params, logs


def save_agent(directory: Union[str, Path], params: AgentParams) -> None:
    """Write one network file per network plus agent_state.yml."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in ("policy", "critic1", "critic2", "target1", "target2"):
        save_params(directory / f"{name}.mlp", getattr(params, name))
    record = {
        "version": AGENT_STATE_VERSION,
        "log_alpha": float(params.log_alpha),
        "target_entropy": float(params.target_entropy),
        "gradient_steps": int(params.gradient_steps),
        "environment_steps": int(params.environment_steps),
        "log_std_min": float(params.log_std_min),
        "log_std_max": float(params.log_std_max),
    }
    if params.override is not None:
        record["override"] = {
            "indices": [int(i) for i in params.override.indices],
            "values": [float(v) for v in params.override.values],
            "randomized": bool(params.override.randomized),
        }
    tmp = directory / "agent_state.yml.tmp"
    tmp.write_text(yaml.safe_dump(record, sort_keys=True))
    tmp.replace(directory / "agent_state.yml")


def load_agent(
    directory: Union[str, Path],
    state_size: int,
    action_size: int,
    hyper: SacHyperparameters,
) -> AgentParams:
    """Read an agent checkpoint and check it against the expected shapes."""
    directory = Path(directory)
    policy_spec, critic_spec = network_specs(state_size, action_size, hyper)
    try:
        record = yaml.safe_load((directory / "agent_state.yml").read_text())
    except (OSError, yaml.YAMLError) as error:
        raise CheckpointError(f"cannot read agent state in {directory}: {error}") from error
    if not isinstance(record, dict) or record.get("version") != AGENT_STATE_VERSION:
        raise CheckpointError(f"{directory}: unsupported agent state record")

    networks = {
        "policy": load_params(directory / "policy.mlp", policy_spec),
        **{
            name: load_params(directory / f"{name}.mlp", critic_spec)
            for name in ("critic1", "critic2", "target1", "target2")
        },
    }
    try:
        override = None
        if "override" in record:
            override = ActionOverride(
                indices=tuple(int(i) for i in record["override"]["indices"]),
                values=tuple(float(v) for v in record["override"].get("values", ())),
                randomized=bool(record["override"].get("randomized", False)),
            )
        scalars = {
            "log_alpha": float(record["log_alpha"]),
            "target_entropy": float(record["target_entropy"]),
            "log_std_min": float(record["log_std_min"]),
            "log_std_max": float(record["log_std_max"]),
            "gradient_steps": int(record["gradient_steps"]),
            "environment_steps": int(record.get("environment_steps", 0)),
        }
    except (KeyError, TypeError, ValueError, AttributeError) as error:
        raise CheckpointError(f"{directory}: malformed agent state: {error!r}") from error
    if override is not None and (
        any(not 0 <= i < action_size for i in override.indices)
        or (not override.randomized and len(override.values) != len(override.indices))
    ):
        raise CheckpointError(f"{directory}: override does not fit a {action_size}-entry action")
    lr = hyper.learning_rate
    return AgentParams(
        policy_opt=AdamState.create(policy_spec.num_params, lr=lr),
        critic1_opt=AdamState.create(critic_spec.num_params, lr=lr),
        critic2_opt=AdamState.create(critic_spec.num_params, lr=lr),
        alpha_opt=AdamState.create(1, lr=lr),
        override=override,
        **scalars,
        **networks,
    )
