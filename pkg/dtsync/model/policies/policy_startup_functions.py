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
from pathlib import Path
from typing import Optional, Union

# Third Party Imports
import numpy as np

# Local Imports
from dtsync.model.policies.baselines import (
    GreedyPolicy,
    PolicyHandle,
    RandomPolicy,
    no_sc_policy,
    random_phi_policy,
)
from dtsync.model.sac import SacHyperparameters, SacPolicy, load_agent
from dtsync.model.simcore import SystemConfig
from dtsync.tools.exceptions import ConfigError

logger = logging.getLogger(__name__)

#: tuple: Policy names accepted by start_policy.
POLICY_NAMES = ("sac", "random", "nosc", "randphi", "greedy")

#: tuple: Policies trained as SAC agents with part of the action overridden.
OVERRIDE_POLICIES = ("nosc", "randphi")

#: tuple: Policies evaluated directly, without training.
ANALYTIC_POLICIES = ("random", "greedy")


def policy_not_found(policy_name: str):
    """Raise the error reported for an unknown policy name."""
    raise ConfigError(
        f"policy: unknown policy '{policy_name}', expected one of {', '.join(POLICY_NAMES)}"
    )


def start_policy(
    policy_name: str,
    config: SystemConfig,
    checkpoint: Optional[Union[str, Path]] = None,
    hyper: Optional[SacHyperparameters] = None,
    seed: int = 0,
) -> PolicyHandle:
    """Build the policy handle selected by name.

    Parameters
    ----------
    policy_name : str
        One of ``sac``, ``random``, ``nosc``, ``randphi`` or ``greedy``.
    config : SystemConfig
        System constants the policy acts under.
    checkpoint : str or Path, optional
        Agent directory; required for ``sac``. For ``nosc`` and ``randphi``
        a checkpoint supplies the inner policy, otherwise the greedy
        heuristic does.
    hyper : SacHyperparameters, optional
        Network shapes expected in the checkpoint.
    seed : int
        Seed of every random draw the policy makes.

    Returns
    -------
    PolicyHandle
        Object with an ``act(state)`` method.
    """
    hyper = hyper or SacHyperparameters()
    if policy_name == "random":
        return RandomPolicy(config, rng=np.random.default_rng(seed))
    elif policy_name == "greedy":
        return GreedyPolicy(config)
    elif policy_name in ("sac",) + OVERRIDE_POLICIES and checkpoint is not None:
        logger.info("Loading agent checkpoint %s", checkpoint)
        params = load_agent(checkpoint, config.state_size, config.action_size, hyper)
        rng = np.random.default_rng(seed)
        policy = SacPolicy(params, rng=rng, deterministic=True)
        if policy_name == "nosc":
            return no_sc_policy(policy, config)
        elif policy_name == "randphi":
            return random_phi_policy(policy, config, rng=rng)
        return policy
    elif policy_name == "nosc":
        return no_sc_policy(GreedyPolicy(config), config)
    elif policy_name == "randphi":
        return random_phi_policy(GreedyPolicy(config), config, rng=np.random.default_rng(seed))
    elif policy_name == "sac":
        raise ConfigError("policy: 'sac' evaluation needs --checkpoint")
    else:
        return policy_not_found(policy_name)
