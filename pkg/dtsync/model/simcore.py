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

"""Per-slot latency and energy model of semantic digital-twin synchronization.

Every function here is pure and deterministic. Scalars and numpy arrays are
both accepted, so one call can evaluate all user devices (UDs) of a slot, or a
whole grid of candidate extraction factors, at once. Units are raw SI
throughout: bits, seconds, Hz (cycles/s), Watts and Joules.
"""

# Standard Library Imports
from dataclasses import dataclass, field, replace
from typing import Sequence, Tuple, Union

# Third Party Imports
import numpy as np

# Local Imports
from dtsync.tools.exceptions import ConfigError, DomainError

ArrayLike = Union[float, np.ndarray]


def db_to_linear(value_db: float) -> float:
    """Convert a dB power ratio to a linear ratio."""
    return 10.0 ** (value_db / 10.0)


def dbm_to_watts(value_dbm: float) -> float:
    """Convert a dBm power level to Watts."""
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Physical and problem constants of the synchronization system.

    Defaults reproduce the published simulation setup: six UDs, a 30 s cycle
    split into 25 slots, 0.2 MHz of bandwidth, -30 dB reference gain and
    -80 dBm noise.
    """

    #: int: Number of user devices K.
    num_uds: int = 6
    #: int: Number of slots N per cycle.
    num_slots: int = 25
    #: float: Cycle length T in seconds.
    cycle: float = 30.0
    #: float: Fraction of a slot reserved for sensing.
    eta: float = 0.25
    #: float: Total uplink bandwidth B in Hz.
    bandwidth: float = 0.2e6
    #: float: Noise power sigma^2 in Watts.
    noise_power: float = 1e-11
    #: float: Reference channel power gain at 1 m (linear).
    beta0: float = 1e-3
    #: float: Signed path loss exponent applied as d ** pathloss_exp.
    pathloss_exp: float = -2.0
    #: float: CPU cycles needed per bit.
    cycles_per_bit: float = 300.0
    #: float: Effective switched capacitance of the UD processors.
    k_loc: float = 1e-27
    #: float: Extraction workload exponent x.
    x_exp: float = 1.2
    #: float: Recovery workload exponent y.
    y_exp: float = 1.5
    #: float: Smallest per-slot data demand in bits.
    d_min: float = 0.6e6
    #: float: Largest per-slot data demand in bits.
    d_max: float = 0.8e6
    #: float: Smallest admissible semantic extraction factor.
    phi_min: float = 0.4
    #: float: Largest UD CPU frequency in Hz.
    f_u_max: float = 1e9
    #: float: Edge server CPU frequency budget in Hz.
    f_e_max: float = 10e9
    #: float: Smallest UD transmission power in Watts.
    p_min: float = 0.01
    #: float: Largest UD transmission power in Watts.
    p_max: float = 0.1
    #: float: Per-slot UD energy budget in Joules.
    e_u_max: float = 0.5
    #: float: Sensing rate v_s in bit/s.
    sense_rate: float = 4e6
    #: float: Sensing energy p_s in J/bit.
    sense_energy_per_bit: float = 1e-8
    #: float: Penalty weight W.
    penalty_w: float = 10.0
    #: tuple: Base station position in meters; the third entry is its height.
    bs_position: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    #: float: Lowest decodable UD frequency as a fraction of f_u_max.
    f_loc_floor: float = 0.01
    #: float: Lowest decodable edge share as a fraction of f_e_max / K.
    edge_floor: float = 0.01
    #: float: Largest decodable edge share as a multiple of f_e_max / K.
    edge_overcommit: float = 2.0
    #: float: Hz per unit of edge-compute penalty.
    edge_penalty_unit: float = 1e9

    @property
    def tau(self) -> float:
        """Slot length in seconds, T / N."""
        return self.cycle / self.num_slots

    @property
    def deadline(self) -> float:
        """Processing deadline (1 - eta) * tau of every slot."""
        return (1.0 - self.eta) * self.tau

    @property
    def per_ud_bandwidth(self) -> float:
        """OFDMA share B / K of each UD."""
        return self.bandwidth / self.num_uds

    @property
    def action_size(self) -> int:
        """Length 4K of a raw action vector."""
        return 4 * self.num_uds

    @property
    def state_size(self) -> int:
        """Length 2K of a state vector."""
        return 2 * self.num_uds

    def with_overrides(self, **overrides) -> "SystemConfig":
        """Return a validated copy with some fields replaced."""
        return replace(self, **overrides).validate()

    def validate(self) -> "SystemConfig":
        """Check every invariant of the configuration.

        Returns
        -------
        SystemConfig
            The configuration itself, to allow chaining.

        Raises
        ------
        ConfigError
            If any invariant is violated. ``key`` names the offending field.
        """
        if int(self.num_uds) != self.num_uds or self.num_uds < 1:
            raise _invalid("num_uds", "must be a positive integer")
        if int(self.num_slots) != self.num_slots or self.num_slots < 1:
            raise _invalid("num_slots", "must be a positive integer")
        for name in (
            "cycle",
            "bandwidth",
            "noise_power",
            "beta0",
            "cycles_per_bit",
            "k_loc",
            "x_exp",
            "y_exp",
            "d_min",
            "f_u_max",
            "f_e_max",
            "p_min",
            "e_u_max",
            "sense_rate",
            "sense_energy_per_bit",
            "penalty_w",
            "edge_penalty_unit",
        ):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise _invalid(name, f"must be finite and strictly positive, got {value}")
        if not 0.0 <= self.eta <= 1.0:
            raise _invalid("eta", f"must lie in [0, 1], got {self.eta}")
        if not 0.0 < self.phi_min <= 1.0:
            raise _invalid("phi_min", f"must lie in (0, 1], got {self.phi_min}")
        if self.p_min > self.p_max:
            raise _invalid("p_min", "p_min must not exceed p_max")
        if self.d_min > self.d_max:
            raise _invalid("d_min", "d_min must not exceed d_max")
        if not 0.0 < self.f_loc_floor <= 1.0:
            raise _invalid("f_loc_floor", "must lie in (0, 1]")
        if not 0.0 < self.edge_floor <= self.edge_overcommit:
            raise _invalid("edge_floor", "must be positive and below edge_overcommit")
        if len(self.bs_position) != 3:
            raise _invalid("bs_position", "must have three coordinates")
        if sensing_capacity(self) < self.d_max:
            raise _invalid(
                "sense_rate",
                f"sensing deadline unsatisfiable: eta*tau*v_s = "
                f"{sensing_capacity(self):.6g} bits < d_max = {self.d_max:.6g} bits",
            )
        return self


def _invalid(key: str, reason: str) -> ConfigError:
    error = ConfigError(f"{key}: {reason}")
    error.key = key
    return error


@dataclass
class UdSlotInput:
    """Observed per-UD slot inputs. Fields hold one entry per UD."""

    #: np.ndarray: Data demand D in bits.
    data_demand: ArrayLike
    #: np.ndarray: Distance to the base station in meters.
    distance: ArrayLike
    #: np.ndarray: Small-scale fading power |g_NLoS|^2.
    fading_power: ArrayLike

    @classmethod
    def stack(cls, inputs: Sequence["UdSlotInput"]) -> "UdSlotInput":
        """Merge single-UD inputs into one vectorized input."""
        return cls(
            data_demand=np.array([float(i.data_demand) for i in inputs]),
            distance=np.array([float(i.distance) for i in inputs]),
            fading_power=np.array([float(i.fading_power) for i in inputs]),
        )


@dataclass
class UdAction:
    """Decoded per-UD decision. Fields hold one entry per UD."""

    #: np.ndarray: Semantic extraction factor phi.
    phi: ArrayLike
    #: np.ndarray: UD CPU frequency in Hz.
    f_loc: ArrayLike
    #: np.ndarray: Transmission power in Watts.
    p_tx: ArrayLike
    #: np.ndarray: Edge CPU frequency granted to the UD in Hz.
    f_edge: ArrayLike

    @classmethod
    def stack(cls, actions: Sequence["UdAction"]) -> "UdAction":
        """Merge single-UD actions into one vectorized action."""
        return cls(
            phi=np.array([float(a.phi) for a in actions]),
            f_loc=np.array([float(a.f_loc) for a in actions]),
            p_tx=np.array([float(a.p_tx) for a in actions]),
            f_edge=np.array([float(a.f_edge) for a in actions]),
        )


@dataclass
class SlotMetrics:
    """Latency and energy breakdown of one slot, one entry per UD."""

    t_s: np.ndarray
    t_en: np.ndarray
    t_up: np.ndarray
    t_de: np.ndarray
    t_dt: np.ndarray
    t_total: np.ndarray
    e_s: np.ndarray
    e_en: np.ndarray
    e_up: np.ndarray
    e_total: np.ndarray
    rate: np.ndarray
    #: float: Slot objective T = sum of t_total over UDs.
    total_latency: float = field(default=0.0)

    @property
    def num_uds(self) -> int:
        """Number of UDs covered by the metrics."""
        return int(np.size(self.t_total))


def _require(condition, message: str) -> None:
    if not np.all(condition):
        raise DomainError(message)


def sensing_capacity(config: SystemConfig) -> float:
    """Bits a UD can sense within the sensing share eta * tau of a slot."""
    return config.eta * config.tau * config.sense_rate


def sensing_budget_energy(config: SystemConfig) -> float:
    """Energy spent sensing the full sensing capacity of a slot."""
    return config.sense_energy_per_bit * sensing_capacity(config)


def sense_latency(demand: ArrayLike, sense_rate: ArrayLike) -> ArrayLike:
    """Time to sense ``demand`` bits at ``sense_rate`` bit/s."""
    demand = np.asarray(demand, dtype=float)
    sense_rate = np.asarray(sense_rate, dtype=float)
    _require(demand > 0, "sense_latency: data demand must be positive")
    _require(sense_rate > 0, "sense_latency: sensing rate must be positive")
    return demand / sense_rate


def sense_energy(demand: ArrayLike, energy_per_bit: ArrayLike) -> ArrayLike:
    """Energy to sense ``demand`` bits."""
    demand = np.asarray(demand, dtype=float)
    _require(demand >= 0, "sense_energy: data demand must be non-negative")
    return energy_per_bit * demand


def extraction_demand(demand: ArrayLike, phi: ArrayLike, x_exp: float) -> ArrayLike:
    """Semantic extraction workload lambda = D / phi**x in bits."""
    demand = np.asarray(demand, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _require(phi > 0, "extraction_demand: extraction factor must be positive")
    _require(demand >= 0, "extraction_demand: data demand must be non-negative")
    return demand / phi**x_exp


def extraction_latency(workload: ArrayLike, cycles_per_bit: float, f_loc: ArrayLike) -> ArrayLike:
    """Local extraction time C * lambda / f."""
    f_loc = np.asarray(f_loc, dtype=float)
    _require(f_loc > 0, "extraction_latency: UD frequency must be positive")
    return cycles_per_bit * np.asarray(workload, dtype=float) / f_loc


def extraction_energy(
    workload: ArrayLike, cycles_per_bit: float, k_loc: float, f_loc: ArrayLike
) -> ArrayLike:
    """Local extraction energy C * k_loc * lambda * f**2."""
    f_loc = np.asarray(f_loc, dtype=float)
    _require(f_loc >= 0, "extraction_energy: UD frequency must be non-negative")
    return cycles_per_bit * k_loc * np.asarray(workload, dtype=float) * f_loc**2


def channel_power_gain(
    distance: ArrayLike, beta0: float, pathloss_exp: float, fading_power: ArrayLike
) -> ArrayLike:
    """Uplink channel power gain beta0 * d**alpha * |g|^2."""
    distance = np.asarray(distance, dtype=float)
    _require(distance > 0, "channel_power_gain: distance must be positive")
    return beta0 * distance**pathloss_exp * np.asarray(fading_power, dtype=float)


def uplink_rate(
    bandwidth: float, p_tx: ArrayLike, gain: ArrayLike, noise_power: float
) -> ArrayLike:
    """Shannon rate B_k * log2(1 + p * |g|^2 / sigma^2) in bit/s."""
    _require(np.asarray(bandwidth) > 0, "uplink_rate: bandwidth must be positive")
    _require(np.asarray(noise_power) > 0, "uplink_rate: noise power must be positive")
    snr = np.asarray(p_tx, dtype=float) * np.asarray(gain, dtype=float) / noise_power
    return bandwidth * np.log2(1.0 + snr)


def uplink_latency(demand: ArrayLike, phi: ArrayLike, rate: ArrayLike) -> ArrayLike:
    """Time to upload the extracted D * phi bits at ``rate``."""
    rate = np.asarray(rate, dtype=float)
    _require(rate > 0, "uplink_latency: uplink rate must be positive")
    return np.asarray(demand, dtype=float) * np.asarray(phi, dtype=float) / rate


def uplink_energy(t_up: ArrayLike, p_tx: ArrayLike) -> ArrayLike:
    """Transmission energy t_up * p."""
    return np.asarray(t_up, dtype=float) * np.asarray(p_tx, dtype=float)


def recovery_latency(
    demand: ArrayLike, phi: ArrayLike, y_exp: float, cycles_per_bit: float, f_edge: ArrayLike
) -> ArrayLike:
    """Edge recovery time C * D * phi / (phi**y * f_e)."""
    phi = np.asarray(phi, dtype=float)
    f_edge = np.asarray(f_edge, dtype=float)
    _require(phi > 0, "recovery_latency: extraction factor must be positive")
    _require(f_edge > 0, "recovery_latency: edge frequency must be positive")
    return cycles_per_bit * np.asarray(demand, dtype=float) * phi ** (1.0 - y_exp) / f_edge


def sync_latency(
    config: SystemConfig,
    demand: ArrayLike,
    distance: ArrayLike,
    fading_power: ArrayLike,
    phi: ArrayLike,
    f_loc: ArrayLike,
    p_tx: ArrayLike,
    f_edge: ArrayLike,
) -> ArrayLike:
    """Synchronization latency t_dt = t_en + t_up + t_de, broadcast over inputs.

    Used by grid searches, where ``phi`` carries an extra candidate axis.
    """
    workload = extraction_demand(demand, phi, config.x_exp)
    t_en = extraction_latency(workload, config.cycles_per_bit, f_loc)
    gain = channel_power_gain(distance, config.beta0, config.pathloss_exp, fading_power)
    rate = uplink_rate(config.per_ud_bandwidth, p_tx, gain, config.noise_power)
    t_up = uplink_latency(demand, phi, rate)
    t_de = recovery_latency(demand, phi, config.y_exp, config.cycles_per_bit, f_edge)
    return t_en + t_up + t_de


def evaluate_slot(config: SystemConfig, inputs, actions) -> SlotMetrics:
    """Compose the full latency and energy model for every UD of a slot.

    Parameters
    ----------
    config : SystemConfig
        System constants.
    inputs : UdSlotInput or sequence of UdSlotInput
        Observed demand, distance and fading, one entry per UD.
    actions : UdAction or sequence of UdAction
        Decoded decisions, one entry per UD.

    Returns
    -------
    SlotMetrics
        Per-UD breakdown and the slot objective.
    """
    if not isinstance(inputs, UdSlotInput):
        inputs = UdSlotInput.stack(inputs)
    if not isinstance(actions, UdAction):
        actions = UdAction.stack(actions)

    demand = np.atleast_1d(np.asarray(inputs.data_demand, dtype=float))
    phi = np.atleast_1d(np.asarray(actions.phi, dtype=float))

    t_s = sense_latency(demand, config.sense_rate)
    e_s = sense_energy(demand, config.sense_energy_per_bit)

    workload = extraction_demand(demand, phi, config.x_exp)
    t_en = extraction_latency(workload, config.cycles_per_bit, actions.f_loc)
    e_en = extraction_energy(workload, config.cycles_per_bit, config.k_loc, actions.f_loc)

    gain = channel_power_gain(
        inputs.distance, config.beta0, config.pathloss_exp, inputs.fading_power
    )
    rate = uplink_rate(config.per_ud_bandwidth, actions.p_tx, gain, config.noise_power)
    t_up = uplink_latency(demand, phi, rate)
    e_up = uplink_energy(t_up, actions.p_tx)

    t_de = recovery_latency(
        demand, phi, config.y_exp, config.cycles_per_bit, actions.f_edge
    )

    t_dt = t_en + t_up + t_de
    t_total = t_s + t_dt
    e_total = e_s + e_en + e_up
    return SlotMetrics(
        t_s=t_s,
        t_en=np.broadcast_to(t_en, demand.shape).astype(float),
        t_up=np.broadcast_to(t_up, demand.shape).astype(float),
        t_de=np.broadcast_to(t_de, demand.shape).astype(float),
        t_dt=np.broadcast_to(t_dt, demand.shape).astype(float),
        t_total=np.broadcast_to(t_total, demand.shape).astype(float),
        e_s=e_s,
        e_en=np.broadcast_to(e_en, demand.shape).astype(float),
        e_up=np.broadcast_to(e_up, demand.shape).astype(float),
        e_total=np.broadcast_to(e_total, demand.shape).astype(float),
        rate=np.broadcast_to(rate, demand.shape).astype(float),
        total_latency=float(np.sum(t_total)),
    )
