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

"""Reference synchronization strategies compared against the learned agent.

Every policy exposes ``act(state) -> raw action`` with the raw action strictly
inside (-1, 1)^(4K), so the environment decodes all of them the same way.
"""

# Standard Library Imports
import logging
from typing import Optional, Protocol

# Third Party Imports
import numpy as np

# Local Imports
from dtsync.model.environment import ACTION_EPS, encode_action, split_state
from dtsync.model.sac import ActionOverride
from dtsync.model.simcore import SystemConfig, UdAction, sync_latency

logger = logging.getLogger(__name__)

#: int: Candidate extraction factors searched by the greedy heuristic.
PHI_GRID_POINTS = 61

#: float: Fraction of the even edge share actually requested, keeping the sum under budget.
EDGE_SHARE_MARGIN = 1.0 - 1e-9


class PolicyHandle(Protocol):
    """Anything that maps a state vector to a raw action vector."""

    def act(self, state) -> np.ndarray:
        ...


def pin_extraction_factor(config: SystemConfig) -> ActionOverride:
    """Pin every phi entry to the raw value that decodes to exactly 1."""
    k = config.num_uds
    return ActionOverride(indices=tuple(range(k)), values=(1.0 - ACTION_EPS,) * k)


def randomize_extraction_factor(config: SystemConfig) -> ActionOverride:
    """Redraw every phi entry uniformly at each step."""
    return ActionOverride(indices=tuple(range(config.num_uds)), randomized=True)


def random_policy(state, rng: np.random.Generator, config: SystemConfig) -> np.ndarray:
    """Uniform raw action over the open box (-1, 1)^(4K)."""
    raw = rng.uniform(-1.0, 1.0, config.action_size)
    return np.clip(raw, -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)


def phi_grid(config: SystemConfig, points: int = PHI_GRID_POINTS) -> np.ndarray:
    """Evenly spaced extraction factors on [phi_min, 1], both ends included."""
    grid = np.linspace(config.phi_min, 1.0, points)
    grid[-1] = 1.0
    return grid


def phi_grid_search(
    config: SystemConfig,
    demand,
    distance,
    f_loc,
    p_tx,
    f_edge,
    fading_power=1.0,
    points: int = PHI_GRID_POINTS,
):
    """Extraction factor minimizing t_dt for each UD.

    Parameters
    ----------
    config : SystemConfig
        System constants.
    demand, distance : array_like
        Per-UD data demand in bits and distance in meters.
    f_loc, p_tx, f_edge : array_like
        Resources held fixed during the search.
    fading_power : array_like
        Fading power assumed by the search; 1 is the Rayleigh mean.
    points : int
        Grid size.

    Returns
    -------
    tuple
        (best phi, best t_dt), one entry per UD. Ties go to the smaller phi.
    """
    grid = phi_grid(config, points)
    column = lambda v: np.atleast_1d(np.asarray(v, dtype=float))[:, None]  # noqa: E731
    latency = sync_latency(
        config,
        column(demand),
        column(distance),
        column(fading_power),
        grid[None, :],
        column(f_loc),
        column(p_tx),
        column(f_edge),
    )
    best = np.argmin(latency, axis=1)
    rows = np.arange(latency.shape[0])
    return grid[best], latency[rows, best]


def greedy_resources(config: SystemConfig) -> dict:
    """Resources the greedy heuristic grants every UD."""
    return {
        "f_loc": config.f_u_max,
        "p_tx": config.p_max,
        "f_edge": config.f_e_max / config.num_uds * EDGE_SHARE_MARGIN,
    }


def greedy_heuristic(state, config: SystemConfig) -> np.ndarray:
    """Full resources per UD and the grid-optimal phi under mean fading."""
    distance, demand = split_state(state, config)
    resources = greedy_resources(config)
    phi, _ = phi_grid_search(config, demand, distance, **resources)
    k = config.num_uds
    actions = UdAction(
        phi=phi,
        f_loc=np.full(k, resources["f_loc"]),
        p_tx=np.full(k, resources["p_tx"]),
        f_edge=np.full(k, resources["f_edge"]),
    )
    return encode_action(actions, config)


class RandomPolicy:
    """Uniformly random synchronization strategy."""

    def __init__(self, config: SystemConfig, rng: Optional[np.random.Generator] = None, seed: int = 0):
        #: SystemConfig: System constants.
        self.config = config

        #: numpy.random.Generator: Source of the random actions.
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    def act(self, state) -> np.ndarray:
        return random_policy(state, self.rng, self.config)


class GreedyPolicy:
    """Deterministic full-resource heuristic with a phi grid search."""

    def __init__(self, config: SystemConfig):
        #: SystemConfig: System constants.
        self.config = config

    def act(self, state) -> np.ndarray:
        return greedy_heuristic(state, self.config)


class NoScPolicy:
    """Wraps a policy and transmits raw data: phi pinned to 1 for every UD."""

    def __init__(self, inner: PolicyHandle, config: SystemConfig):
        #: PolicyHandle: Policy deciding the remaining resources.
        self.inner = inner

        #: ActionOverride: The phi pin.
        self.override = pin_extraction_factor(config)

    def act(self, state) -> np.ndarray:
        return self.override.apply(self.inner.act(state))


def no_sc_policy(inner: PolicyHandle, config: SystemConfig) -> NoScPolicy:
    """Wrap ``inner`` so every decoded extraction factor is exactly 1."""
    return NoScPolicy(inner, config)


class RandomPhiPolicy:
    """Wraps a policy and draws every extraction factor uniformly at random.

    The wrapped policy keeps deciding the UD frequencies, transmission powers
    and edge shares.
    """

    def __init__(
        self,
        inner: PolicyHandle,
        config: SystemConfig,
        rng: Optional[np.random.Generator] = None,
        seed: int = 0,
    ):
        #: PolicyHandle: Policy deciding the remaining resources.
        self.inner = inner

        #: ActionOverride: The randomized phi entries.
        self.override = randomize_extraction_factor(config)

        #: numpy.random.Generator: Source of the extraction factors.
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    def act(self, state) -> np.ndarray:
        return self.override.apply(self.inner.act(state), self.rng)


def random_phi_policy(
    inner: PolicyHandle, config: SystemConfig, rng: Optional[np.random.Generator] = None
) -> RandomPhiPolicy:
    """Wrap ``inner`` so every extraction factor is a fresh uniform draw."""
    return RandomPhiPolicy(inner, config, rng=rng)
