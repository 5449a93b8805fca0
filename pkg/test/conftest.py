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
import logging

# Third Party Imports
import numpy as np
import pytest

# Local Imports
from dtsync.config.config import ExperimentConfig
from dtsync.model.sac import SacHyperparameters
from dtsync.model.simcore import SystemConfig


@pytest.fixture
def default_config():
    return SystemConfig().validate()


@pytest.fixture
def small_config():
    """Two UDs over five slots."""
    return SystemConfig(num_uds=2, num_slots=5).validate()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_hyper():
    """Small networks and budget for fast training tests."""
    return SacHyperparameters(
        n_epoch=1,
        n_step=40,
        batch_size=8,
        buffer_size=200,
        hidden_width=16,
        learning_rate=1e-3,
        target_update_interval=10,
    )


@pytest.fixture
def tiny_experiment(small_config, tiny_hyper):
    config = ExperimentConfig(system=small_config, sac=tiny_hyper)
    return config.updated("experiment", eval_episodes=3)


@pytest.fixture
def reset_logging():
    """Undo log_setup so later tests see the default logging tree."""
    yield
    for name in ("dtsync", None):
        logger = logging.getLogger(name)
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()
    logging.getLogger("dtsync").setLevel(logging.NOTSET)
    logging.getLogger("dtsync").propagate = True
