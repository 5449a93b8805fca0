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

"""Sequential decision process wrapped around the slot model.

A raw action is a vector in (-1, 1)^(4K) laid out as four blocks of K entries:
extraction factors, UD frequencies, transmission powers and edge frequencies.
A state is the 2K vector of normalized distances followed by normalized
demands.
"""

# Standard Library Imports
import logging
from dataclasses import dataclass, field
from typing import Optional

# Third Party Imports
import numpy as np

# Local Imports
from dtsync.model.dynamics import MobilityParams, UdPopulation
from dtsync.model.simcore import SlotMetrics, SystemConfig, UdAction, UdSlotInput, evaluate_slot
from dtsync.tools.exceptions import ContractViolation

logger = logging.getLogger(__name__)

#: float: Distance normalization constant of the state, in meters.
DISTANCE_REF = 100.0

#: float: Margin kept between emitted raw actions and +-1.
ACTION_EPS = 1e-9

#: float: Unit-interval distance within which decoded values snap to an end.
SNAP_TOL = 1e-6

#: tuple: Names of the four raw action blocks, in order.
ACTION_BLOCKS = ("phi", "f_loc", "p_tx", "f_edge")


@dataclass
class DecodedAction:
    """A raw action mapped into physical units."""

    #: UdAction: Executed (projected) per-UD allocations.
    actions: UdAction
    #: float: Requested edge frequency sum before projection, in Hz.
    edge_request_sum: float
    #: bool: Whether the edge allocation had to be scaled down.
    projected: bool


@dataclass
class Penalties:
    """Hinge penalties of one slot."""

    deadline: float = 0.0
    energy: float = 0.0
    edge: float = 0.0

    @property
    def total(self) -> float:
        """Sum of the three penalties."""
        return self.deadline + self.energy + self.edge


@dataclass
class Transition:
    """One environment step."""

    state: np.ndarray
    raw_action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class EpisodeSummary:
    """Undiscounted accounting of the slots of the current episode."""

    slots: int = 0
    total_reward: float = 0.0
    total_latency: float = 0.0
    total_sync_latency: float = 0.0
    deadline_penalty: float = 0.0
    energy_penalty: float = 0.0
    edge_penalty: float = 0.0
    deadline_violations: int = 0
    energy_violations: int = 0
    edge_violations: int = 0
    #: int: UD-slot pairs evaluated.
    ud_slots: int = 0
    latencies: list = field(default_factory=list)

    @property
    def mean_latency(self) -> float:
        """Average slot objective T over the slots run so far."""
        return self.total_latency / self.slots if self.slots else float("nan")

    @property
    def mean_sync_latency(self) -> float:
        """Average t_dt over every UD-slot pair run so far."""
        return self.total_sync_latency / self.ud_slots if self.ud_slots else float("nan")


def _interval(raw: np.ndarray, low, high) -> np.ndarray:
    unit = (raw + 1.0) / 2.0
    unit = np.where(unit >= 1.0 - SNAP_TOL, 1.0, unit)
    unit = np.where(unit <= SNAP_TOL, 0.0, unit)
    value = low + unit * (high - low)
    value = np.where(unit == 1.0, high, value)
    return value


def _encode(value, low: float, high: float) -> np.ndarray:
    """Inverse of the decoding map, kept strictly inside (-1, 1)."""
    value = np.asarray(value, dtype=float)
    if high == low:
        return np.zeros_like(value)
    raw = 2.0 * (value - low) / (high - low) - 1.0
    return np.clip(raw, -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)


def action_bounds(config: SystemConfig) -> dict:
    """Decodable (low, high) interval of every action block."""
    edge_share = config.f_e_max / config.num_uds
    return {
        "phi": (config.phi_min, 1.0),
        "f_loc": (config.f_loc_floor * config.f_u_max, config.f_u_max),
        "p_tx": (config.p_min, config.p_max),
        "f_edge": (config.edge_floor * edge_share, config.edge_overcommit * edge_share),
    }


def encode_action(actions: UdAction, config: SystemConfig) -> np.ndarray:
    """Map physical per-UD allocations back to a raw action vector."""
    bounds = action_bounds(config)
    blocks = [
        np.broadcast_to(_encode(getattr(actions, name), *bounds[name]), (config.num_uds,))
        for name in ACTION_BLOCKS
    ]
    return np.concatenate(blocks).astype(float)


def decode_action(raw, config: SystemConfig) -> DecodedAction:
    """Map a raw action into the feasible set.

    Parameters
    ----------
    raw : array_like
        Raw action in (-1, 1)^(4K).
    config : SystemConfig
        System constants.

    Returns
    -------
    DecodedAction
        Physical allocations. If the requested edge frequencies sum above
        f_e_max they are scaled down proportionally; the unscaled sum is kept
        for the edge penalty.

    Raises
    ------
    ContractViolation
        If the vector has the wrong length or an entry outside (-1, 1).
    """
    raw = np.asarray(raw, dtype=float)
    k = config.num_uds
    if raw.shape != (4 * k,):
        raise ContractViolation(f"raw action must have shape ({4 * k},), got {raw.shape}")
    if not np.all(np.isfinite(raw)) or np.any(np.abs(raw) >= 1.0):
        raise ContractViolation("raw action entries must lie strictly inside (-1, 1)")

    bounds = action_bounds(config)
    values = {
        name: _interval(raw[i * k : (i + 1) * k], *bounds[name])
        for i, name in enumerate(ACTION_BLOCKS)
    }
    f_edge = values["f_edge"]
    edge_request_sum = float(np.sum(f_edge))
    projected = edge_request_sum > config.f_e_max
    if projected:
        f_edge = f_edge * (config.f_e_max / edge_request_sum)
        # rounding in the rescale must not push the sum back over the budget
        while np.sum(f_edge) > config.f_e_max:
            f_edge = f_edge * (1.0 - np.finfo(float).eps)
    actions = UdAction(
        phi=values["phi"], f_loc=values["f_loc"], p_tx=values["p_tx"], f_edge=f_edge
    )
    return DecodedAction(actions=actions, edge_request_sum=edge_request_sum, projected=projected)


def compute_penalties(
    metrics: SlotMetrics, edge_request_sum: float, config: SystemConfig
) -> Penalties:
    """Hinge penalties for deadline, energy and edge-compute violations."""
    w = config.penalty_w
    deadline = w * float(np.sum(np.maximum(0.0, metrics.t_dt - config.deadline)))
    energy = w * float(np.sum(np.maximum(0.0, metrics.e_total - config.e_u_max)))
    edge = w * max(0.0, edge_request_sum - config.f_e_max) / config.edge_penalty_unit
    return Penalties(deadline=deadline, energy=energy, edge=edge)


def build_state(distances, demands, config: SystemConfig) -> np.ndarray:
    """Normalized 2K state vector."""
    return np.concatenate(
        [np.asarray(distances, dtype=float) / DISTANCE_REF, np.asarray(demands, dtype=float) / config.d_max]
    )


def split_state(state, config: SystemConfig):
    """Recover (distances in m, demands in bits) from a state vector."""
    state = np.asarray(state, dtype=float)
    k = config.num_uds
    return state[:k] * DISTANCE_REF, state[k:] * config.d_max


class SyncEnvironment:
    """Digital-twin synchronization environment over N slots per episode."""

    def __init__(
        self,
        config: SystemConfig,
        mobility: Optional[MobilityParams] = None,
        seed: int = 0,
    ):
        """Initialize the environment.

        Parameters
        ----------
        config : SystemConfig
            System constants; validated here.
        mobility : MobilityParams, optional
            Mobility parameters. Defaults apply when omitted.
        seed : int
            Seed used by the first reset when none is given.
        """
        #: SystemConfig: System constants.
        self.config = config.validate()

        #: MobilityParams: Mobility parameters.
        self.mobility = (mobility or MobilityParams()).validate()

        #: int: Seed of the next reset without an explicit seed.
        self.next_seed = int(seed)

        #: UdPopulation: UDs of the running episode.
        self.population = None

        #: int: Index of the next slot to run.
        self.slot = 0

        #: bool: Whether the episode reached N slots.
        self.done = True

        #: SlotMetrics: Metrics of the last step.
        self.last_metrics = None

        #: Penalties: Penalties of the last step.
        self.last_penalties = None

        #: DecodedAction: Decoded action of the last step.
        self.last_decoded = None

        #: EpisodeSummary: Accounting of the running episode.
        self.episode = EpisodeSummary()

    @property
    def state_size(self) -> int:
        """Length of a state vector."""
        return self.config.state_size

    @property
    def action_size(self) -> int:
        """Length of a raw action vector."""
        return self.config.action_size

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        """Start a new episode and return its first state."""
        if seed is None:
            seed = self.next_seed
        self.next_seed = int(seed) + 1
        self.population = UdPopulation(self.config, self.mobility, int(seed))
        self.slot = 0
        self.done = False
        self.last_metrics = None
        self.last_penalties = None
        self.last_decoded = None
        self.episode = EpisodeSummary()
        return self.observe()

    def observe(self) -> np.ndarray:
        """State vector of the current slot."""
        return build_state(self.population.distances(), self.population.demands(), self.config)

    def decode_action(self, raw) -> DecodedAction:
        """Decode a raw action with this environment's configuration."""
        return decode_action(raw, self.config)

    def step(self, raw) -> Transition:
        """Execute one slot.

        Raises
        ------
        ContractViolation
            If the episode is already done or the action is malformed.
        """
        if self.done or self.population is None:
            raise ContractViolation("step called on a finished episode; call reset first")

        state = self.observe()
        raw = np.asarray(raw, dtype=float)
        decoded = decode_action(raw, self.config)
        inputs = UdSlotInput(
            data_demand=self.population.demands(),
            distance=self.population.distances(),
            fading_power=self.population.fading(),
        )
        metrics = evaluate_slot(self.config, inputs, decoded.actions)
        penalties = compute_penalties(metrics, decoded.edge_request_sum, self.config)
        reward = -metrics.total_latency - penalties.total

        self.population.advance()
        self.slot += 1
        self.done = self.slot >= self.config.num_slots

        self.last_metrics = metrics
        self.last_penalties = penalties
        self.last_decoded = decoded
        self._account(metrics, penalties, reward)
        return Transition(
            state=state,
            raw_action=raw.copy(),
            reward=reward,
            next_state=self.observe(),
            done=self.done,
        )

    def _account(self, metrics: SlotMetrics, penalties: Penalties, reward: float) -> None:
        episode = self.episode
        episode.slots += 1
        episode.ud_slots += metrics.num_uds
        episode.total_reward += reward
        episode.total_latency += metrics.total_latency
        episode.total_sync_latency += float(np.sum(metrics.t_dt))
        episode.deadline_penalty += penalties.deadline
        episode.energy_penalty += penalties.energy
        episode.edge_penalty += penalties.edge
        episode.deadline_violations += int(np.sum(metrics.t_dt > self.config.deadline))
        episode.energy_violations += int(np.sum(metrics.e_total > self.config.e_u_max))
        episode.edge_violations += int(penalties.edge > 0)
        episode.latencies.append(metrics.total_latency)
