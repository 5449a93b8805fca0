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
import struct

# Third Party Imports
import numpy as np
import pytest

# Local Imports
from dtsync.model.autodiff import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    AdamState,
    MlpSpec,
    ParamSet,
    adam_step,
    adam_update,
    finite_diff_check,
    forward,
    gradients,
    init_params,
    load_params,
    mac_count,
    save_params,
)
from dtsync.tools.exceptions import CheckpointError, ContractViolation, TrainingDivergedError


def hand_net() -> ParamSet:
    """2-2-1 network with hand-picked weights."""
    return ParamSet(
        weights=[np.array([[1.0, -1.0], [0.5, 2.0]]), np.array([[3.0, -2.0]])],
        biases=[np.array([0.0, -1.0]), np.array([0.5])],
    )


def test_spec_counts():
    spec = MlpSpec((8, 16, 16, 4))
    assert spec.input_size == 8
    assert spec.output_size == 4
    assert spec.num_affine == 3
    assert spec.num_params == 8 * 16 + 16 + 16 * 16 + 16 + 16 * 4 + 4
    assert mac_count(spec) == 8 * 16 + 16 * 16 + 16 * 4


@pytest.mark.parametrize("sizes", [(3,), (0, 2), (2, 0, 1)])
def test_invalid_specs_are_rejected(sizes):
    with pytest.raises(ContractViolation):
        MlpSpec(sizes)


def test_zero_network_outputs_zero(rng):
    params = ParamSet.zeros(MlpSpec((5, 7, 3)))
    np.testing.assert_array_equal(forward(params, rng.standard_normal(5)), np.zeros(3))


def test_single_affine_layer(rng):
    w = rng.standard_normal((3, 4))
    b = rng.standard_normal(3)
    x = rng.standard_normal(4)
    np.testing.assert_allclose(forward(ParamSet([w], [b]), x), w @ x + b)


def test_hand_computed_forward_pass():
    # hidden = relu([1 - 2, 0.5 + 4 - 1]) = [0, 3.5]; out = -7 + 0.5
    np.testing.assert_allclose(forward(hand_net(), np.array([1.0, 2.0])), [-6.5])


def test_wrong_input_width_is_rejected():
    with pytest.raises(ContractViolation):
        forward(hand_net(), np.zeros(3))


def test_zero_upstream_gives_zero_gradients(rng):
    params = init_params(MlpSpec((4, 6, 2)), rng)
    grads, input_grad = gradients(params, rng.standard_normal(4), np.zeros(2))
    assert not np.any(grads.flat())
    assert not np.any(input_grad)


def test_linear_layer_weight_gradient_is_the_input(rng):
    x = rng.standard_normal(4)
    params = ParamSet([rng.standard_normal((1, 4))], [np.zeros(1)])
    grads, input_grad = gradients(params, x, np.ones(1))
    np.testing.assert_allclose(grads.weights[0][0], x)
    np.testing.assert_allclose(input_grad, params.weights[0][0])


@pytest.mark.parametrize(
    "sizes",
    [
        (8, 16, 16, 4),
        (4, 32, 32, 16),
        (12, 32, 32, 1),
    ],
)
def test_gradients_match_finite_differences(sizes):
    rng = np.random.default_rng(5)
    params = init_params(MlpSpec(sizes), rng)
    x = rng.standard_normal((3, sizes[0]))
    assert finite_diff_check(params, x, rng=rng) < 1e-4


def test_full_size_policy_and_critic_gradients():
    rng = np.random.default_rng(8)
    for sizes in [(12, 256, 256, 48), (36, 256, 256, 1)]:
        params = init_params(MlpSpec(sizes), rng)
        x = rng.standard_normal((2, sizes[0]))
        assert finite_diff_check(params, x, rng=rng, max_coordinates=16) < 1e-4


def test_corrupted_gradient_is_detected():
    rng = np.random.default_rng(2)
    params = init_params(MlpSpec((3, 4, 2)), rng)

    def corrupted(p, x, upstream):
        grads, input_grad = gradients(p, x, upstream)
        grads.weights[0][0, 0] *= 2.0
        grads.weights[0][0, 0] += 1.0
        return grads, input_grad

    assert finite_diff_check(params, rng.standard_normal((2, 3)), rng=rng, gradient_fn=corrupted) > 1e-2


def test_affine_function_is_checked_exactly(rng):
    params = ParamSet([rng.standard_normal((2, 3))], [rng.standard_normal(2)])
    assert finite_diff_check(params, rng.standard_normal((2, 3)), rng=rng) < 1e-9


def test_adam_zero_gradient_keeps_parameters(rng):
    theta = rng.standard_normal(5)
    state = AdamState.create(5, lr=1e-2)
    np.testing.assert_array_equal(adam_update(theta, np.zeros(5), state), theta)


def test_adam_step_size_approaches_learning_rate():
    state = AdamState.create(1, lr=1e-3)
    theta = np.zeros(1)
    for _ in range(500):
        previous = theta
        theta = adam_update(theta, np.array([0.3]), state)
    assert previous[0] - theta[0] == pytest.approx(1e-3, rel=1e-4)


def test_adam_minimizes_a_quadratic_bowl(rng):
    theta = rng.standard_normal(4)
    state = AdamState.create(4, lr=1e-2)
    for _ in range(2000):
        theta = adam_update(theta, 2.0 * theta, state)
    assert np.linalg.norm(theta) < 1e-3


def test_adam_rejects_non_finite_results():
    state = AdamState.create(2)
    with pytest.raises(TrainingDivergedError):
        adam_update(np.array([np.inf, 0.0]), np.ones(2), state)


def test_adam_step_on_parameter_sets(rng):
    params = init_params(MlpSpec((2, 3, 1)), rng)
    grads, _ = gradients(params, rng.standard_normal(2), np.ones(1))
    updated = adam_step(params, grads, AdamState.create(params.spec.num_params, lr=1e-2))
    assert updated.spec == params.spec
    assert not np.array_equal(updated.flat(), params.flat())


def test_initialization_limits(rng):
    spec = MlpSpec((10, 20, 4))
    params = init_params(spec, rng, output_scale=1e-2)
    limit = np.sqrt(6.0 / 30.0)
    assert np.all(np.abs(params.weights[0]) <= limit)
    assert np.all(np.abs(params.weights[1]) <= 1e-2 * np.sqrt(6.0 / 24.0))
    assert not any(np.any(b) for b in params.biases)


def test_checkpoint_round_trip(tmp_path, rng):
    params = init_params(MlpSpec((3, 5, 2)), rng)
    path = tmp_path / "net.mlp"
    save_params(path, params)
    loaded = load_params(path, MlpSpec((3, 5, 2)))
    np.testing.assert_array_equal(loaded.flat(), params.flat())


def test_checkpoint_layout_is_documented(tmp_path, rng):
    params = init_params(MlpSpec((3, 5, 2)), rng)
    path = tmp_path / "net.mlp"
    save_params(path, params)
    data = path.read_bytes()
    magic, version, count = struct.unpack_from("<6sHI", data, 0)
    assert (magic, version, count) == (CHECKPOINT_MAGIC, 1, 3)
    offset = struct.calcsize("<6sHI")
    assert struct.unpack_from("<3I", data, offset) == (3, 5, 2)
    values = np.frombuffer(data[offset + 12 :], dtype="<f8")
    np.testing.assert_array_equal(values[:15], params.weights[0].ravel())


def test_checkpoint_mismatch_and_corruption(tmp_path, rng):
    path = tmp_path / "net.mlp"
    save_params(path, init_params(MlpSpec((3, 5, 2)), rng))
    with pytest.raises(CheckpointError):
        load_params(path, MlpSpec((3, 6, 2)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError):
        load_params(path)
    with pytest.raises(CheckpointError):
        load_params(tmp_path / "missing.mlp")


def test_trailing_bytes_are_a_checkpoint_error(tmp_path, rng):
    path = tmp_path / "net.mlp"
    save_params(path, init_params(MlpSpec((2, 3, 1)), rng))
    path.write_bytes(path.read_bytes() + b"\x00\x01\x02")
    with pytest.raises(CheckpointError, match="float64"):
        load_params(path)


def test_empty_layer_table_is_a_checkpoint_error(tmp_path):
    path = tmp_path / "net.mlp"
    path.write_bytes(struct.pack("<6sHI", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, 0))
    with pytest.raises(CheckpointError, match="layer table"):
        load_params(path)
    path.write_bytes(struct.pack("<6sHI2I", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, 2, 3, 0))
    with pytest.raises(CheckpointError, match="layer table"):
        load_params(path)
