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
from dataclasses import dataclass

# Third Party Imports
import numpy as np

# Local Imports
from dtsync.tools.exceptions import ContractViolation


@dataclass
class Batch:
    """A mini-batch of transitions, one row per sample."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return self.rewards.shape[0]


class ReplayBuffer:
    """FIFO ring buffer of transitions with uniform sampling.

    Storage grows by doubling up to ``capacity`` so a 1e6-slot buffer only
    allocates what a run actually fills.
    """

    def __init__(self, state_size: int, action_size: int, capacity: int = 1_000_000):
        """Initialize the buffer.

        Parameters
        ----------
        state_size : int
            Length of a state vector.
        action_size : int
            Length of a raw action vector.
        capacity : int
            Largest number of transitions kept.
        """
        if capacity < 1:
            raise ContractViolation("replay capacity must be positive")

        #: int: Largest number of transitions kept.
        self.capacity = int(capacity)

        #: int: Number of transitions currently stored.
        self.size = 0

        #: int: Slot the next transition is written to.
        self.cursor = 0

        self._state_size = state_size
        self._action_size = action_size
        self._allocate(min(self.capacity, 1024))

    def _allocate(self, rows: int) -> None:
        old = getattr(self, "_states", None)
        states = np.zeros((rows, self._state_size))
        actions = np.zeros((rows, self._action_size))
        rewards = np.zeros(rows)
        next_states = np.zeros((rows, self._state_size))
        dones = np.zeros(rows)
        if old is not None:
            n = self._states.shape[0]
            states[:n] = self._states
            actions[:n] = self._actions
            rewards[:n] = self._rewards
            next_states[:n] = self._next_states
            dones[:n] = self._dones
        self._states, self._actions, self._rewards = states, actions, rewards
        self._next_states, self._dones = next_states, dones

    def __len__(self) -> int:
        return self.size

    def add(self, state, action, reward: float, next_state, done: bool) -> None:
        """Store one transition, evicting the oldest at capacity."""
        rows = self._states.shape[0]
        if self.cursor >= rows and rows < self.capacity:
            self._allocate(min(self.capacity, 2 * rows))
        self._states[self.cursor] = state
        self._actions[self.cursor] = action
        self._rewards[self.cursor] = reward
        self._next_states[self.cursor] = next_state
        self._dones[self.cursor] = float(done)
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform sample of stored indices, with replacement."""
        if self.size < batch_size:
            raise ContractViolation(
                f"cannot sample {batch_size} transitions from a buffer holding {self.size}"
            )
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform mini-batch of stored transitions."""
        index = self.sample_indices(batch_size, rng)
        return Batch(
            states=self._states[index],
            actions=self._actions[index],
            rewards=self._rewards[index],
            next_states=self._next_states[index],
            dones=self._dones[index],
        )
