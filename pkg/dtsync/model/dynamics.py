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

"""Stochastic slot-to-slot evolution of the user devices.

Random numbers come from numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence``. Each UD owns its own substream, derived with
``SeedSequence(seed).spawn(K)``, so the k-th UD sees the same draws for a
given seed on every platform and regardless of how many UDs exist after it.
"""

# Standard Library Imports
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

# Third Party Imports
import numpy as np

# Local Imports
from dtsync.model.simcore import SystemConfig
from dtsync.tools.exceptions import ConfigError, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MobilityParams:
    """Gauss-Markov mobility and initial placement parameters."""

    #: float: Memory level rho of the Gauss-Markov process.
    rho: float = 0.8
    #: float: Asymptotic mean speed in m/s.
    mean_speed: float = 0.5
    #: float: Speed ceiling in m/s.
    max_speed: float = 1.0
    #: float: Speed innovation standard deviation in m/s.
    speed_sigma: float = 0.1
    #: float: Heading innovation standard deviation in radians.
    heading_sigma: float = 0.2
    #: float or None: Asymptotic mean heading. None keeps the current heading.
    mean_heading: Optional[float] = None
    #: tuple: Center of the spawn disk in meters.
    spawn_center: Tuple[float, float, float] = (50.0, 0.0, 0.0)
    #: float: Radius of the spawn disk in meters.
    spawn_radius: float = 5.0

    def validate(self) -> "MobilityParams":
        """Check parameter ranges, raising ConfigError on failure."""
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho: must lie in [0, 1], got {self.rho}")
        for name in ("mean_speed", "max_speed", "speed_sigma", "heading_sigma", "spawn_radius"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be non-negative")
        if len(self.spawn_center) != 3:
            raise ConfigError("spawn_center: must have three coordinates")
        return self


class RngStream:
    """Seeded PCG64 random stream with reproducible substreams."""

    def __init__(self, seed: int, seed_sequence: Optional[np.random.SeedSequence] = None):
        """Initialize the stream.

        Parameters
        ----------
        seed : int
            64-bit seed.
        seed_sequence : numpy.random.SeedSequence, optional
            Pre-derived sequence, used when spawning substreams.
        """
        #: int: The root seed of this stream family.
        self.seed = int(seed)

        #: numpy.random.SeedSequence: Entropy source of this stream.
        self.seed_sequence = seed_sequence or np.random.SeedSequence(self.seed)

        #: numpy.random.Generator: The generator drawing the numbers.
        self.generator = np.random.Generator(np.random.PCG64(self.seed_sequence))

    def spawn(self, count: int) -> List["RngStream"]:
        """Derive ``count`` independent child streams."""
        return [RngStream(self.seed, child) for child in self.seed_sequence.spawn(count)]


@dataclass
class UdState:
    """Physical state of one UD at the start of a slot."""

    #: np.ndarray: Position (x, y, 0) in meters.
    position: np.ndarray
    #: float: Speed in m/s.
    speed: float
    #: float: Heading in radians.
    heading: float
    #: float: Data demand of the slot in bits.
    demand: float
    #: float: Fading power of the slot.
    fading_power: float


def evolve_gauss_markov(speed, heading, rng: np.random.Generator, params: MobilityParams):
    """Advance speed and heading by one Gauss-Markov step.

    Parameters
    ----------
    speed : float or np.ndarray
        Current speed in m/s.
    heading : float or np.ndarray
        Current heading in radians.
    rng : numpy.random.Generator
        Source of the two standard normal innovations.
    params : MobilityParams
        Process parameters.

    Returns
    -------
    tuple
        The new (speed, heading), speed clamped to [0, max_speed].
    """
    rho = params.rho
    spread = math.sqrt(max(0.0, 1.0 - rho * rho))
    xi_speed = rng.standard_normal(np.shape(speed))
    xi_heading = rng.standard_normal(np.shape(heading))
    mean_heading = heading if params.mean_heading is None else params.mean_heading

    new_speed = rho * speed + (1.0 - rho) * params.mean_speed + spread * params.speed_sigma * xi_speed
    new_heading = rho * heading + (1.0 - rho) * mean_heading + spread * params.heading_sigma * xi_heading
    new_speed = np.clip(new_speed, 0.0, params.max_speed)
    if np.ndim(new_speed) == 0:
        return float(new_speed), float(new_heading)
    return new_speed, new_heading


def step_mobility(
    state: UdState, tau: float, rng: np.random.Generator, params: MobilityParams
) -> UdState:
    """Move a UD for one slot and evolve its speed and heading.

    The y coordinate advances with sin(theta); using cos for both axes would
    pin every trajectory to the diagonal.
    """
    x, y, z = state.position
    position = np.array(
        [
            x + state.speed * math.cos(state.heading) * tau,
            y + state.speed * math.sin(state.heading) * tau,
            z,
        ]
    )
    speed, heading = evolve_gauss_markov(state.speed, state.heading, rng, params)
    return replace(state, position=position, speed=speed, heading=heading)


def sample_fading(rng: np.random.Generator, size=None):
    """Draw |g|^2 for g ~ CN(0, 1): a unit-mean exponential."""
    scale = math.sqrt(0.5)
    real = rng.normal(0.0, scale, size)
    imag = rng.normal(0.0, scale, size)
    return real * real + imag * imag


def sample_demand(rng: np.random.Generator, d_min: float, d_max: float, size=None):
    """Draw a data demand uniformly from [d_min, d_max] bits."""
    if d_min > d_max:
        raise DomainError(f"sample_demand: d_min={d_min} exceeds d_max={d_max}")
    return rng.uniform(d_min, d_max, size)


def distance_to_bs(position, bs_position) -> float:
    """Euclidean distance between UD position(s) and the base station."""
    delta = np.asarray(position, dtype=float) - np.asarray(bs_position, dtype=float)
    return np.linalg.norm(delta, axis=-1)


def spawn_ud(
    rng: np.random.Generator, config: SystemConfig, params: MobilityParams
) -> UdState:
    """Place a UD uniformly in the spawn disk with a uniform heading."""
    radius = params.spawn_radius * math.sqrt(rng.uniform())
    angle = rng.uniform(0.0, 2.0 * math.pi)
    cx, cy, _ = params.spawn_center
    position = np.array([cx + radius * math.cos(angle), cy + radius * math.sin(angle), 0.0])
    heading = float(rng.uniform(0.0, 2.0 * math.pi))
    return UdState(
        position=position,
        speed=params.mean_speed,
        heading=heading,
        demand=float(sample_demand(rng, config.d_min, config.d_max)),
        fading_power=float(sample_fading(rng)),
    )


class UdPopulation:
    """All UDs of one environment, each driven by its own random substream."""

    def __init__(self, config: SystemConfig, params: MobilityParams, seed: int):
        """Spawn the population.

        Parameters
        ----------
        config : SystemConfig
            System constants.
        params : MobilityParams
            Mobility parameters.
        seed : int
            Root seed; UD k uses the k-th spawned substream.
        """
        #: SystemConfig: System constants.
        self.config = config

        #: MobilityParams: Mobility parameters.
        self.params = params

        #: list[RngStream]: One substream per UD.
        self.streams = RngStream(seed).spawn(config.num_uds)

        #: list[UdState]: Current UD states.
        self.states = [spawn_ud(s.generator, config, params) for s in self.streams]

    def advance(self) -> None:
        """Move every UD one slot and redraw its demand and fading."""
        tau = self.config.tau
        for index, stream in enumerate(self.streams):
            rng = stream.generator
            moved = step_mobility(self.states[index], tau, rng, self.params)
            moved.demand = float(sample_demand(rng, self.config.d_min, self.config.d_max))
            moved.fading_power = float(sample_fading(rng))
            self.states[index] = moved

    def distances(self) -> np.ndarray:
        """Distances of all UDs to the base station."""
        positions = np.stack([s.position for s in self.states])
        return distance_to_bs(positions, self.config.bs_position)

    def demands(self) -> np.ndarray:
        """Data demands of all UDs."""
        return np.array([s.demand for s in self.states])

    def fading(self) -> np.ndarray:
        """Fading powers of all UDs."""
        return np.array([s.fading_power for s in self.states])

    def positions(self) -> Sequence[np.ndarray]:
        """Positions of all UDs."""
        return [s.position.copy() for s in self.states]
