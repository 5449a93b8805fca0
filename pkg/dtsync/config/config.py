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

"""Experiment configuration files.

A configuration is a YAML mapping with up to five sections::

    system:      SystemConfig fields (plus beta0_db / noise_power_dbm)
    mobility:    MobilityParams fields
    sac:         SacHyperparameters fields
    experiment:  seed, policy, evaluation and output settings
    sweep:       axis, values, policies, workers

Missing sections and keys take their defaults, so an empty file is valid.
Errors name the 1-based line of the offending key.
"""

# Standard Library Imports
import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

# Third Party Imports
import yaml

# Local Imports
from dtsync.model.dynamics import MobilityParams
from dtsync.model.sac import SacHyperparameters
from dtsync.model.simcore import SystemConfig, db_to_linear, dbm_to_watts
from dtsync.tools.exceptions import ConfigError

logger = logging.getLogger(__name__)

#: str: Environment variable overriding the output root.
OUTPUT_ROOT_ENV = "DTSYNC_OUTPUT_ROOT"

#: tuple: Axes a sweep may vary.
SWEEP_AXES = ("K", "D_range", "phi_min", "f_u_max")

#: Path: Directory holding the configuration files shipped with the package.
CONFIG_DIR = Path(__file__).resolve().parent

#: dict: Keys given in decibels and the linear field each one replaces.
DECIBEL_KEYS = {
    "beta0_db": ("beta0", db_to_linear),
    "noise_power_dbm": ("noise_power", dbm_to_watts),
}


@dataclass(frozen=True)
class ExperimentSettings:
    """Run-level settings of the experiment section."""

    seed: int = 0
    policy: str = "sac"
    #: int: Evaluation episodes E.
    eval_episodes: int = 50
    #: int: Seed of the first evaluation episode; the rest follow consecutively.
    eval_seed: int = 1000
    output_dir: str = "results"
    metrics_file: str = "metrics.csv"
    checkpoint_dir: str = "checkpoint"


@dataclass(frozen=True)
class SweepSettings:
    """Sweep section: one run per (policy, value) pair."""

    axis: Optional[str] = None
    values: Tuple[float, ...] = ()
    #: tuple: Policies swept; empty means the experiment policy alone.
    policies: Tuple[str, ...] = ()
    #: int: Worker processes; 1 runs the points in order in this process.
    workers: int = 1
    results_file: str = "sweep.csv"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one train, eval or sweep invocation needs."""

    system: SystemConfig = field(default_factory=SystemConfig)
    mobility: MobilityParams = field(default_factory=MobilityParams)
    sac: SacHyperparameters = field(default_factory=SacHyperparameters)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)

    def validate(self) -> "ExperimentConfig":
        """Validate every section."""
        self.system.validate()
        self.mobility.validate()
        self.sac.validate()
        if self.experiment.eval_episodes < 1:
            raise ConfigError("eval_episodes: must be at least 1")
        if self.sweep.axis is not None and self.sweep.axis not in SWEEP_AXES:
            raise ConfigError(
                f"axis: unknown sweep axis '{self.sweep.axis}', expected one of {', '.join(SWEEP_AXES)}"
            )
        if self.sweep.workers < 1:
            raise ConfigError("workers: must be at least 1")
        return self

    def updated(self, section: str, **values) -> "ExperimentConfig":
        """Return a validated copy with some keys of one section replaced."""
        current = getattr(self, section)
        return replace(self, **{section: replace(current, **values)}).validate()


#: dict: Dataclass behind every section.
SECTIONS = {
    "system": SystemConfig,
    "mobility": MobilityParams,
    "sac": SacHyperparameters,
    "experiment": ExperimentSettings,
    "sweep": SweepSettings,
}


def _key_lines(root) -> Dict[Tuple[str, ...], int]:
    """Map (section,) and (section, key) paths to 1-based source lines."""
    lines: Dict[Tuple[str, ...], int] = {}
    if not isinstance(root, yaml.MappingNode):
        return lines
    for section_node, body in root.value:
        section = str(section_node.value)
        lines[(section,)] = section_node.start_mark.line + 1
        if isinstance(body, yaml.MappingNode):
            for key_node, _ in body.value:
                lines[(section, str(key_node.value))] = key_node.start_mark.line + 1
    return lines


def _coerce(name: str, value: Any, default: Any, line: Optional[int]):
    """Convert a parsed YAML value to the type of the field default."""

    def fail(expected: str):
        raise ConfigError(f"{name}: expected {expected}, got {value!r}", line=line)

    def number(item):
        if isinstance(item, bool):
            fail("a number")
        if isinstance(item, (int, float)):
            return float(item)
        if isinstance(item, str):
            # YAML 1.1 reads 1e-3 (no dot) as a string
            try:
                return float(item)
            except ValueError:
                fail("a number")
        fail("a number")

    if isinstance(default, bool):
        if not isinstance(value, bool):
            fail("true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool):
            fail("an integer")
        if isinstance(value, int):
            return value
        converted = number(value)
        if not math.isfinite(converted) or converted != int(converted):
            fail("an integer")
        return int(converted)
    if isinstance(default, float):
        return number(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            fail("a string")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            fail("a list")
        if default and len(value) != len(default):
            fail(f"a list of {len(default)} entries")
        if name == "policies":
            return tuple(str(item) for item in value)
        return tuple(number(item) for item in value)
    # Optional fields: None or a number, or a string for the sweep axis
    if value is None or isinstance(value, str) and name == "axis":
        return value
    return number(value)


def _build_section(
    section: str, body: Any, lines: Dict[Tuple[str, ...], int]
):
    cls = SECTIONS[section]
    if body is None:
        return cls()
    if not isinstance(body, dict):
        raise ConfigError(f"{section}: expected a mapping", line=lines.get((section,)))

    body = dict(body)
    known = {f.name: f for f in fields(cls)}
    defaults = cls()
    if section == "system":
        for key, (target, convert) in DECIBEL_KEYS.items():
            if key not in body:
                continue
            line = lines.get((section, key))
            if target in body:
                raise ConfigError(f"{key}: given together with {target}", line=line)
            body[target] = convert(_coerce(key, body.pop(key), 0.0, line))

    values = {}
    for key, value in body.items():
        key = str(key)
        line = lines.get((section, key))
        if key not in known:
            raise ConfigError(f"{section}: unknown key '{key}'", line=line)
        values[key] = _coerce(key, value, getattr(defaults, key), line)
    built = cls(**values)
    validate = getattr(built, "validate", None)
    if validate is None:
        return built
    try:
        validate()
    except ConfigError as error:
        key = getattr(error, "key", None) or str(error).split(":", 1)[0]
        raise ConfigError(str(error), line=lines.get((section, key), lines.get((section,)))) from error
    return built


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text.

    Raises
    ------
    ConfigError
        On YAML syntax errors, unknown sections or keys, wrongly typed values
        or violated invariants.
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as error:
        mark = getattr(error, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"unparsable YAML: {getattr(error, 'problem', error)}", line=line) from error

    if data is None:
        return ExperimentConfig().validate()
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections", line=1)

    lines = _key_lines(root)
    sections = {}
    for section, body in data.items():
        section = str(section)
        if section not in SECTIONS:
            raise ConfigError(f"unknown section '{section}'", line=lines.get((section,)))
        sections[section] = _build_section(section, body, lines)
    config = ExperimentConfig(**sections)
    try:
        return config.validate()
    except ConfigError as error:
        key = str(error).split(":", 1)[0]
        line = next((n for path, n in lines.items() if path[-1] == key), None)
        raise ConfigError(str(error), line=line) from error


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """Load an experiment configuration file.

    Parameters
    ----------
    path : str or Path, optional
        YAML file. None loads the shipped defaults.

    Returns
    -------
    ExperimentConfig
        Parsed configuration with defaults applied.
    """
    path = Path(path) if path is not None else CONFIG_DIR / "experiment.yml"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigError(f"cannot read configuration {path}: {error}") from error
    logger.debug("Loaded configuration %s", path)
    return parse_config(text)


def resolve_output_dir(config: ExperimentConfig, override: Optional[Union[str, Path]] = None) -> Path:
    """Output directory: explicit override, then the environment, then the file."""
    if override is not None:
        return Path(override)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root:
        return Path(root) / config.experiment.output_dir
    return Path(config.experiment.output_dir)


def apply_sweep_value(config: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    """Configuration of one sweep point.

    ``D_range`` moves the demand interval so its midpoint equals ``value``
    while keeping its half width; the other axes set the field directly.
    """
    system = config.system
    if axis == "K":
        if float(value) != int(value):
            raise ConfigError(f"K: sweep value {value} is not an integer")
        return config.updated("system", num_uds=int(value))
    if axis == "D_range":
        half = (system.d_max - system.d_min) / 2.0
        return config.updated("system", d_min=value - half, d_max=value + half)
    if axis == "phi_min":
        return config.updated("system", phi_min=float(value))
    if axis == "f_u_max":
        return config.updated("system", f_u_max=float(value))
    raise ConfigError(f"axis: unknown sweep axis '{axis}', expected one of {', '.join(SWEEP_AXES)}")
