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

"""Command line entry point: ``dtsync train | eval | sweep``."""

# Standard Library Imports
import argparse
import logging
import sys
from dataclasses import asdict
from typing import List, Optional

# Third Party Imports
import yaml

# Local Imports
from dtsync.config.config import SWEEP_AXES, load_config
from dtsync.controller.experiment_controller import EXIT_CODES, ExperimentController
from dtsync.log_files.log_functions import log_setup
from dtsync.model.policies.policy_startup_functions import POLICY_NAMES
from dtsync.tools.exceptions import CheckpointError, ConfigError, TrainingDivergedError

logger = logging.getLogger("dtsync.main")


def parse_values(text: str) -> List[float]:
    """Parse a comma separated list of numbers such as ``2,4,6,8``."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def create_parser() -> argparse.ArgumentParser:
    """Build the argument parser of every subcommand."""
    parser = argparse.ArgumentParser(
        prog="dtsync",
        description="Digital twin synchronization simulator with a soft actor-critic agent.",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-file", default=None, help="also write the log to this file")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="experiment YAML (defaults when omitted)")
    common.add_argument("--seed", type=int, default=None, help="override experiment.seed")
    common.add_argument("--out", default=None, help="output directory")

    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", parents=[common], help="train or roll out a policy")
    train.add_argument("--policy", choices=POLICY_NAMES, default=None)

    evaluate = commands.add_parser("eval", parents=[common], help="evaluate a policy")
    source = evaluate.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint", default=None, help="agent checkpoint directory")
    source.add_argument("--policy", choices=POLICY_NAMES, default=None)
    evaluate.add_argument("--episodes", type=int, default=None, help="override eval_episodes")

    sweep = commands.add_parser("sweep", parents=[common], help="sweep one system parameter")
    sweep.add_argument("--axis", choices=SWEEP_AXES, default=None)
    sweep.add_argument("--values", type=parse_values, default=None, help="e.g. 2,4,6,8")
    sweep.add_argument("--policies", default=None, help="comma separated, e.g. sac,greedy")
    sweep.add_argument("--workers", type=int, default=None)
    return parser


def run(args: argparse.Namespace) -> int:
    """Execute a parsed command and return the exit code."""
    config = load_config(args.config)
    if args.seed is not None:
        config = config.updated("experiment", seed=args.seed)

    if args.command == "train":
        if args.policy is not None:
            config = config.updated("experiment", policy=args.policy)
        return ExperimentController(config, args.out).run_training()

    if args.command == "eval":
        if args.episodes is not None:
            config = config.updated("experiment", eval_episodes=args.episodes)
        summary = ExperimentController(config, args.out).run_eval(
            checkpoint=args.checkpoint, policy=args.policy
        )
        report = asdict(summary)
        report.pop("episode_latencies")
        sys.stdout.write(yaml.safe_dump(report, sort_keys=False))
        return EXIT_CODES["ok"]

    policies = None
    if args.policies:
        policies = [name.strip() for name in args.policies.split(",") if name.strip()]
    rows = ExperimentController(config, args.out).run_sweep(
        axis=args.axis, values=args.values, policies=policies, workers=args.workers
    )
    for row in rows:
        sys.stdout.write(
            f"{row.axis}={row.value!r} {row.policy}: "
            + (f"{row.mean_latency!r} +- {row.std_latency!r}" if row.status == "ok" else row.error)
            + "\n"
        )
    return EXIT_CODES["ok"]


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ``dtsync`` console script."""
    parser = create_parser()
    args = parser.parse_args(argv)
    try:
        log_setup(level=args.log_level, log_file=args.log_file)
        return run(args)
    except ConfigError as error:
        logger.error("Configuration error: %s", error)
        return EXIT_CODES["config"]
    except CheckpointError as error:
        logger.error("Checkpoint error: %s", error)
        return EXIT_CODES["checkpoint"]
    except TrainingDivergedError as error:
        logger.error("Training diverged: %s", error)
        return EXIT_CODES["diverged"]


if __name__ == "__main__":
    sys.exit(main())
