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

"""Fixed-topology multilayer perceptrons with exact reverse-mode gradients.

Hidden layers use ReLU, the output layer is affine. Weights are stored as
(out, in) matrices and inputs as row vectors, so a batch is a (B, in) array.
Everything runs in float64.
"""

# Standard Library Imports
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

# Third Party Imports
import numpy as np

# Local Imports
from dtsync.tools.exceptions import CheckpointError, ContractViolation, TrainingDivergedError

logger = logging.getLogger(__name__)

#: bytes: Leading bytes of every network checkpoint.
CHECKPOINT_MAGIC = b"DTSMLP"

#: int: Checkpoint format version.
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    """Layer sizes of a network: input, hidden..., output."""

    layer_sizes: Tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2:
            raise ContractViolation("an MLP needs at least an input and an output layer")
        if any(s < 1 for s in sizes):
            raise ContractViolation(f"layer sizes must be positive, got {sizes}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def num_affine(self) -> int:
        """Number of weight matrices."""
        return len(self.layer_sizes) - 1

    @property
    def num_params(self) -> int:
        return sum(o * i + o for i, o in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))


@dataclass
class ParamSet:
    """Weights and biases of an MLP."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @property
    def spec(self) -> MlpSpec:
        sizes = [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]
        return MlpSpec(tuple(sizes))

    @classmethod
    def zeros(cls, spec: MlpSpec) -> "ParamSet":
        pairs = list(zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]))
        return cls(
            weights=[np.zeros((o, i)) for i, o in pairs],
            biases=[np.zeros(o) for _, o in pairs],
        )

    @classmethod
    def from_flat(cls, spec: MlpSpec, flat: np.ndarray) -> "ParamSet":
        """Rebuild a parameter set from its flat view."""
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (spec.num_params,):
            raise ContractViolation(
                f"flat parameter vector must have {spec.num_params} entries, got {flat.shape}"
            )
        weights, biases, offset = [], [], 0
        for i, o in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
            weights.append(flat[offset : offset + o * i].reshape(o, i).copy())
            offset += o * i
            biases.append(flat[offset : offset + o].copy())
            offset += o
        return cls(weights=weights, biases=biases)

    def flat(self) -> np.ndarray:
        """Concatenate layer by layer: weight matrix row-major, then bias."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def copy(self) -> "ParamSet":
        return ParamSet([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


def init_params(
    spec: MlpSpec, rng: np.random.Generator, output_scale: float = 1.0
) -> ParamSet:
    """Glorot-uniform weights, zero biases, last layer scaled by ``output_scale``."""
    params = ParamSet.zeros(spec)
    for index, w in enumerate(params.weights):
        fan_out, fan_in = w.shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.weights[index] = rng.uniform(-limit, limit, size=w.shape)
    params.weights[-1] *= output_scale
    return params


def _as_batch(x, size: int) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != size:
        raise ContractViolation(f"expected input width {size}, got shape {x.shape}")
    return batch, single


def _forward_cache(params: ParamSet, batch: np.ndarray):
    inputs, preacts = [], []
    h = batch
    last = len(params.weights) - 1
    for index, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w.T + b
        preacts.append(z)
        h = z if index == last else np.maximum(z, 0.0)
    return h, inputs, preacts


def forward(params: ParamSet, x) -> np.ndarray:
    """Evaluate the network on one input vector or a (B, in) batch."""
    batch, single = _as_batch(x, params.weights[0].shape[1])
    out, _, _ = _forward_cache(params, batch)
    return out[0] if single else out


def gradients(params: ParamSet, x, upstream) -> Tuple[ParamSet, np.ndarray]:
    """Reverse-mode gradient of <upstream, forward(params, x)>.

    Parameters
    ----------
    params : ParamSet
        Network parameters.
    x : array_like
        One input vector or a (B, in) batch.
    upstream : array_like
        Cotangent of the output, same leading shape as the output.

    Returns
    -------
    tuple
        Parameter gradients (summed over the batch) and the input gradient.
    """
    batch, single = _as_batch(x, params.weights[0].shape[1])
    out_size = params.weights[-1].shape[0]
    delta = np.asarray(upstream, dtype=float).reshape(batch.shape[0], -1)
    if delta.shape[1] != out_size:
        raise ContractViolation(f"upstream must have width {out_size}, got {delta.shape[1]}")

    _, inputs, preacts = _forward_cache(params, batch)
    count = len(params.weights)
    grad_w: List[Optional[np.ndarray]] = [None] * count
    grad_b: List[Optional[np.ndarray]] = [None] * count
    for index in reversed(range(count)):
        grad_w[index] = delta.T @ inputs[index]
        grad_b[index] = delta.sum(axis=0)
        delta = delta @ params.weights[index]
        if index > 0:
            delta = delta * (preacts[index - 1] > 0.0)
    input_grad = delta[0] if single else delta
    return ParamSet(grad_w, grad_b), input_grad


def mac_count(spec: MlpSpec) -> int:
    """Multiply-accumulate operations of one forward pass."""
    return sum(i * o for i, o in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]))


@dataclass
class AdamState:
    """Moment accumulators and hyperparameters of an Adam optimizer."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def create(cls, size: int, lr: float = 1e-4, **kwargs) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size), lr=lr, **kwargs)


def adam_update(flat: np.ndarray, grad: np.ndarray, state: AdamState) -> np.ndarray:
    """Bias-corrected Adam update of a flat parameter vector."""
    grad = np.asarray(grad, dtype=float)
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    updated = flat - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if not np.all(np.isfinite(updated)):
        raise TrainingDivergedError(f"Adam step {state.step} produced non-finite parameters")
    return updated


def adam_step(params: ParamSet, grads: ParamSet, state: AdamState) -> ParamSet:
    """Apply one Adam update and return the new parameter set."""
    spec = params.spec
    return ParamSet.from_flat(spec, adam_update(params.flat(), grads.flat(), state))


def finite_diff_check(
    params: ParamSet,
    x,
    rng: Optional[np.random.Generator] = None,
    h: float = 1e-5,
    num_directions: int = 4,
    max_coordinates: int = 64,
    gradient_fn: Callable = gradients,
) -> float:
    """Largest relative error between ``gradient_fn`` and central differences.

    The scalar checked is <r, forward(params, x)> for a random projection r.
    Parameter gradients are compared along random directions and on up to
    ``max_coordinates`` single coordinates (all of them for small networks);
    input gradients are compared coordinate by coordinate.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    spec = params.spec
    batch, _ = _as_batch(x, spec.input_size)
    projection = rng.standard_normal((batch.shape[0], spec.output_size))

    def scalar(p: ParamSet, inp: np.ndarray) -> float:
        return float(np.sum(projection * forward(p, inp)))

    grads, input_grad = gradient_fn(params, batch, projection)
    analytic = grads.flat()
    theta = params.flat()
    pairs = []

    def along(direction: np.ndarray) -> float:
        plus = scalar(ParamSet.from_flat(spec, theta + h * direction), batch)
        minus = scalar(ParamSet.from_flat(spec, theta - h * direction), batch)
        return (plus - minus) / (2.0 * h)

    for _ in range(num_directions):
        direction = rng.standard_normal(theta.size)
        direction /= np.linalg.norm(direction)
        pairs.append((float(analytic @ direction), along(direction)))

    if theta.size <= max_coordinates:
        coordinates = np.arange(theta.size)
    else:
        coordinates = rng.choice(theta.size, size=max_coordinates, replace=False)
    for index in coordinates:
        direction = np.zeros(theta.size)
        direction[index] = 1.0
        pairs.append((float(analytic[index]), along(direction)))

    input_grad = np.asarray(input_grad).reshape(batch.shape)
    for idx in np.ndindex(batch.shape):
        bumped = batch.copy()
        bumped[idx] += h
        plus = scalar(params, bumped)
        bumped[idx] -= 2.0 * h
        minus = scalar(params, bumped)
        pairs.append((float(input_grad[idx]), (plus - minus) / (2.0 * h)))

    worst = 0.0
    for a, n in pairs:
        scale = max(abs(a), abs(n), 1e-5)
        worst = max(worst, abs(a - n) / scale)
    return worst


def save_params(path: Union[str, Path], params: ParamSet) -> None:
    """Write a versioned little-endian checkpoint of one network."""
    sizes = params.spec.layer_sizes
    header = struct.pack("<6sHI", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(sizes))
    header += struct.pack(f"<{len(sizes)}I", *sizes)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as handle:
        handle.write(header)
        handle.write(np.asarray(params.flat(), dtype="<f8").tobytes())
    tmp.replace(path)


def load_params(path: Union[str, Path], expected: Optional[MlpSpec] = None) -> ParamSet:
    """Read a checkpoint written by :func:`save_params`.

    Raises
    ------
    CheckpointError
        If the file is truncated, has a foreign header or does not match
        ``expected``.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as error:
        raise CheckpointError(f"cannot read checkpoint {path}: {error}") from error
    fixed = struct.calcsize("<6sHI")
    if len(data) < fixed:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, count = struct.unpack_from("<6sHI", data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a dtsync network checkpoint")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    sizes_end = fixed + 4 * count
    if len(data) < sizes_end:
        raise CheckpointError(f"{path}: truncated layer table")
    try:
        spec = MlpSpec(struct.unpack_from(f"<{count}I", data, fixed))
    except ContractViolation as error:
        raise CheckpointError(f"{path}: invalid layer table: {error}") from error
    if expected is not None and spec != expected:
        raise CheckpointError(
            f"{path}: layer sizes {spec.layer_sizes} do not match {expected.layer_sizes}"
        )
    if (len(data) - sizes_end) % 8:
        raise CheckpointError(f"{path}: parameter block is not a whole number of float64 values")
    flat = np.frombuffer(data, dtype="<f8", offset=sizes_end)
    if flat.size != spec.num_params:
        raise CheckpointError(f"{path}: expected {spec.num_params} parameters, found {flat.size}")
    return ParamSet.from_flat(spec, flat.astype(float))
