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

"""Training, evaluation and sweep orchestration."""

# Standard Library Imports
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

# Third Party Imports
import numpy as np
import yaml

# Local Imports
from dtsync.config.config import ExperimentConfig, apply_sweep_value, resolve_output_dir
from dtsync.model.environment import EpisodeSummary, SyncEnvironment
from dtsync.model.policies.baselines import (
    PolicyHandle,
    pin_extraction_factor,
    randomize_extraction_factor,
)
from dtsync.model.policies.policy_startup_functions import (
    ANALYTIC_POLICIES,
    POLICY_NAMES,
    policy_not_found,
    start_policy,
)
from dtsync.model.sac import (
    AgentParams,
    EpisodeLog,
    SacPolicy,
    next_episode_seed,
    save_agent,
    train,
    training_streams,
)
from dtsync.tools.exceptions import ConfigError, DtsyncError, TrainingDivergedError
from dtsync.view.metrics_writer import MetricsRow, MetricsWriter, SweepRow, SweepWriter

logger = logging.getLogger(__name__)

#: dict: Process exit codes of the command line entry points.
EXIT_CODES = {"ok": 0, "diverged": 1, "config": 2, "checkpoint": 3}

#: dict: Action override of each SAC scheme that does not control phi itself.
OVERRIDE_FACTORIES = {"nosc": pin_extraction_factor, "randphi": randomize_extraction_factor}


@dataclass
class EvalSummary:
    """Statistics over E evaluation episodes."""

    policy: str
    episodes: int
    #: float: Mean over episodes of the per-slot average objective T.
    mean_latency: float
    #: float: Sample standard deviation of the same per-episode values.
    std_latency: float
    mean_sync_latency: float
    mean_return: float
    #: float: Fraction of UD-slot pairs missing the processing deadline.
    deadline_violation_rate: float
    #: float: Fraction of UD-slot pairs over the energy budget.
    energy_violation_rate: float
    #: float: Fraction of slots requesting more edge frequency than available.
    edge_violation_rate: float
    episode_latencies: List[float] = field(default_factory=list)


def metrics_row(
    epoch: int,
    step: int,
    episode: int,
    summary: EpisodeSummary,
    alpha: Optional[float] = None,
    critic_loss1: Optional[float] = None,
    critic_loss2: Optional[float] = None,
) -> MetricsRow:
    """Flatten an episode summary into a CSV row."""
    return MetricsRow(
        epoch=epoch,
        step=step,
        episode=episode,
        episode_return=float(summary.total_reward),
        mean_latency=float(summary.mean_latency),
        mean_sync_latency=float(summary.mean_sync_latency),
        deadline_penalty=float(summary.deadline_penalty),
        energy_penalty=float(summary.energy_penalty),
        edge_penalty=float(summary.edge_penalty),
        deadline_violations=summary.deadline_violations,
        energy_violations=summary.energy_violations,
        edge_violations=summary.edge_violations,
        alpha=alpha,
        critic_loss1=critic_loss1,
        critic_loss2=critic_loss2,
    )


def rollout_episode(env: SyncEnvironment, policy: PolicyHandle, seed: int) -> EpisodeSummary:
    """Run one full episode and return its accounting."""
    state = env.reset(seed)
    while True:
        transition = env.step(policy.act(state))
        if transition.done:
            return env.episode
        state = transition.next_state


def evaluate_policy(
    config: ExperimentConfig, policy: PolicyHandle, name: str = ""
) -> EvalSummary:
    """Evaluate a policy on the fixed evaluation seeds of the configuration."""
    env = SyncEnvironment(config.system, config.mobility)
    first = config.experiment.eval_seed
    summaries = [
        rollout_episode(env, policy, first + index)
        for index in range(config.experiment.eval_episodes)
    ]
    latencies = np.array([s.mean_latency for s in summaries])
    ud_slots = sum(s.ud_slots for s in summaries)
    slots = sum(s.slots for s in summaries)
    return EvalSummary(
        policy=name,
        episodes=len(summaries),
        mean_latency=float(latencies.mean()),
        std_latency=float(latencies.std(ddof=1)) if latencies.size > 1 else 0.0,
        mean_sync_latency=float(np.mean([s.mean_sync_latency for s in summaries])),
        mean_return=float(np.mean([s.total_reward for s in summaries])),
        deadline_violation_rate=sum(s.deadline_violations for s in summaries) / ud_slots,
        energy_violation_rate=sum(s.energy_violations for s in summaries) / ud_slots,
        edge_violation_rate=sum(s.edge_violations for s in summaries) / slots,
        episode_latencies=[float(v) for v in latencies],
    )


def dump_config(config: ExperimentConfig, path: Union[str, Path]) -> None:
    """Write the fully resolved configuration next to the run outputs."""

    def plain(value):
        if isinstance(value, dict):
            return {k: plain(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [plain(v) for v in value]
        return value

    Path(path).write_text(yaml.safe_dump(plain(asdict(config)), sort_keys=False), encoding="utf-8")


class ExperimentController:
    """Runs one experiment configuration into an output directory."""

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None):
        """Initialize the controller.

        Parameters
        ----------
        config : ExperimentConfig
            Validated configuration.
        output_dir : str or Path, optional
            Directory for metrics, checkpoints and sweep tables. Defaults to
            the configured output directory under $DTSYNC_OUTPUT_ROOT.
        """
        #: ExperimentConfig: The experiment being run.
        self.config = config.validate()

        #: Path: Destination of every artifact.
        self.output_dir = resolve_output_dir(config, output_dir)

    @property
    def metrics_path(self) -> Path:
        return self.output_dir / self.config.experiment.metrics_file

    @property
    def checkpoint_path(self) -> Path:
        return self.output_dir / self.config.experiment.checkpoint_dir

    def train_agent(self, policy: Optional[str] = None) -> AgentParams:
        """Train SAC, streaming metrics.

        ``nosc`` pins phi to 1 and ``randphi`` redraws it uniformly every
        step; SAC learns the remaining resources in both cases.

        A checkpoint is written at the end of every epoch, so the last good
        one survives a divergence.
        """
        config = self.config
        policy = policy or config.experiment.policy
        override = None
        if policy in OVERRIDE_FACTORIES:
            override = OVERRIDE_FACTORIES[policy](config.system)
        env = SyncEnvironment(config.system, config.mobility)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        dump_config(config, self.output_dir / "config.yml")

        with MetricsWriter(self.metrics_path) as writer:

            def on_episode(log: EpisodeLog) -> None:
                writer.write(
                    metrics_row(
                        log.epoch,
                        log.step,
                        log.episode,
                        log.summary,
                        alpha=log.alpha,
                        critic_loss1=log.critic_loss1,
                        critic_loss2=log.critic_loss2,
                    )
                )

            def on_epoch(epoch: int, params: AgentParams) -> None:
                save_agent(self.checkpoint_path, params)

            params, _ = train(
                env,
                config.sac,
                seed=config.experiment.seed,
                override=override,
                on_episode=on_episode,
                on_epoch=on_epoch,
            )
        save_agent(self.checkpoint_path, params)
        logger.info("Saved agent checkpoint to %s", self.checkpoint_path)
        return params

    def rollout_analytic(self, policy: str) -> None:
        """Roll an analytic policy out for the training budget, writing metrics."""
        config = self.config
        streams = training_streams(config.experiment.seed)
        handle = start_policy(policy, config.system, seed=config.experiment.seed)
        if policy == "random":
            handle.rng = streams.act.generator
        env = SyncEnvironment(config.system, config.mobility)
        episode_rng = streams.episodes.generator
        self.output_dir.mkdir(parents=True, exist_ok=True)
        dump_config(config, self.output_dir / "config.yml")

        budget = config.sac.n_step
        with MetricsWriter(self.metrics_path) as writer:
            step = 0
            episode = 0
            state = env.reset(next_episode_seed(episode_rng))
            for epoch in range(config.sac.n_epoch):
                for _ in range(budget):
                    transition = env.step(handle.act(state))
                    step += 1
                    if transition.done:
                        writer.write(metrics_row(epoch, step, episode, env.episode))
                        episode += 1
                        state = env.reset(next_episode_seed(episode_rng))
                    else:
                        state = transition.next_state
                logger.info("epoch %d/%d: %d episodes rolled out", epoch + 1, config.sac.n_epoch, episode)

    def run_training(self) -> int:
        """Train (or roll out) the configured policy; returns an exit code."""
        policy = self.config.experiment.policy
        if policy not in POLICY_NAMES:
            policy_not_found(policy)
        try:
            if policy in ANALYTIC_POLICIES:
                self.rollout_analytic(policy)
            else:
                self.train_agent(policy)
        except TrainingDivergedError as error:
            logger.error("Training diverged: %s", error)
            logger.error("Last good checkpoint kept in %s", self.checkpoint_path)
            return EXIT_CODES["diverged"]
        logger.info("Metrics written to %s", self.metrics_path)
        return EXIT_CODES["ok"]

    def run_eval(
        self, checkpoint: Optional[Union[str, Path]] = None, policy: Optional[str] = None
    ) -> EvalSummary:
        """Evaluate a checkpoint or an analytic policy over E episodes.

        Raises
        ------
        CheckpointError
            If the checkpoint cannot be read or does not match the system.
        """
        config = self.config
        name = policy or ("sac" if checkpoint is not None else config.experiment.policy)
        handle = start_policy(
            name, config.system, checkpoint=checkpoint, hyper=config.sac, seed=config.experiment.seed
        )
        summary = evaluate_policy(config, handle, name)
        logger.info(
            "%s: mean latency %.6g s +- %.3g over %d episodes",
            name,
            summary.mean_latency,
            summary.std_latency,
            summary.episodes,
        )
        return summary

    def run_sweep(
        self,
        axis: Optional[str] = None,
        values: Optional[Sequence[float]] = None,
        policies: Optional[Sequence[str]] = None,
        workers: Optional[int] = None,
    ) -> List[SweepRow]:
        """One run per (policy, value); failures are flagged, not fatal."""
        settings = self.config.sweep
        axis = axis or settings.axis
        values = list(values if values is not None else settings.values)
        policies = list(policies or settings.policies or (self.config.experiment.policy,))
        workers = workers or settings.workers
        if axis is None or not values:
            raise ConfigError("sweep: an axis and at least one value are required")
        for name in policies:
            if name not in POLICY_NAMES:
                policy_not_found(name)
        # fail fast on values the axis cannot take
        for value in values:
            apply_sweep_value(self.config, axis, value)

        jobs = [
            (self.config, axis, float(value), name, str(self.output_dir / f"{axis}={value}" / name))
            for value in values
            for name in policies
        ]
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info("Sweeping %s over %s for %s (%d runs)", axis, values, policies, len(jobs))
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                rows = list(executor.map(_sweep_job, jobs))
        else:
            rows = [_sweep_job(job) for job in jobs]

        with SweepWriter(self.output_dir / settings.results_file) as writer:
            for row in rows:
                writer.write(row)
        failed = sum(row.status != "ok" for row in rows)
        if failed:
            logger.warning("%d of %d sweep runs failed", failed, len(rows))
        return rows


def run_sweep_point(
    config: ExperimentConfig, axis: str, value: float, policy: str, output_dir: Union[str, Path]
) -> SweepRow:
    """Train if needed, then evaluate one policy at one sweep value."""
    point = apply_sweep_value(config, axis, value)
    point = point.updated("experiment", policy=policy)
    controller = ExperimentController(point, output_dir)
    if policy in ANALYTIC_POLICIES:
        handle = start_policy(policy, point.system, seed=point.experiment.seed)
    else:
        params = controller.train_agent(policy)
        handle = SacPolicy(
            params, rng=np.random.default_rng(point.experiment.eval_seed), deterministic=True
        )
    summary = evaluate_policy(point, handle, policy)
    logger.info("%s=%s %s: mean latency %.6g s", axis, value, policy, summary.mean_latency)
    return SweepRow(
        axis=axis,
        value=float(value),
        policy=policy,
        seed=point.experiment.seed,
        mean_latency=summary.mean_latency,
        std_latency=summary.std_latency,
        mean_sync_latency=summary.mean_sync_latency,
        deadline_violation_rate=summary.deadline_violation_rate,
        energy_violation_rate=summary.energy_violation_rate,
        edge_violation_rate=summary.edge_violation_rate,
    )


def _sweep_job(job) -> SweepRow:
    config, axis, value, policy, output_dir = job
    try:
        return run_sweep_point(config, axis, value, policy, output_dir)
    except (DtsyncError, ArithmeticError, ValueError) as error:
        logger.error("%s=%s %s failed: %s", axis, value, policy, error)
        return SweepRow(
            axis=axis,
            value=value,
            policy=policy,
            seed=config.experiment.seed,
            status="failed",
            error=f"{type(error).__name__}: {error}",
        )


def run_training(config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None) -> int:
    """Train the configured policy and return a process exit code."""
    return ExperimentController(config, output_dir).run_training()


def run_eval(
    config: ExperimentConfig,
    checkpoint: Optional[Union[str, Path]] = None,
    policy: Optional[str] = None,
) -> EvalSummary:
    """Evaluate a checkpoint or an analytic policy."""
    return ExperimentController(config).run_eval(checkpoint=checkpoint, policy=policy)


def run_sweep(
    config: ExperimentConfig,
    axis: Optional[str] = None,
    values: Optional[Sequence[float]] = None,
    policies: Optional[Sequence[str]] = None,
    output_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
) -> List[SweepRow]:
    """Run a sweep and write its tidy CSV."""
    return ExperimentController(config, output_dir).run_sweep(axis, values, policies, workers)
