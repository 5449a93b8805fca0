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
import logging.config
from pathlib import Path
from typing import Optional, Union

# Third Party Imports
import yaml

# Local Imports
from dtsync.tools.exceptions import ConfigError

#: Path: Logging configuration shipped with the package.
LOGGING_CONFIG = Path(__file__).resolve().parent / "logging.yml"


def log_setup(
    level: Optional[str] = None,
    log_file: Optional[Union[str, Path]] = None,
    config_path: Union[str, Path] = LOGGING_CONFIG,
) -> None:
    """Configure logging from the YAML dictConfig file.

    Parameters
    ----------
    level : str, optional
        Level name overriding the configured dtsync level, e.g. ``DEBUG``.
    log_file : str or Path, optional
        Additional file receiving every dtsync record at the chosen level.
    config_path : str or Path
        dictConfig YAML file.
    """
    with open(config_path, "r", encoding="utf-8") as handle:
        config = yaml.safe_load(handle)

    if level is not None:
        level = level.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ConfigError(f"log level: unknown level '{level}'")
        config["loggers"]["dtsync"]["level"] = level
        config["handlers"]["console"]["level"] = level

    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        config["handlers"]["file"] = {
            "class": "logging.FileHandler",
            "formatter": "base",
            "filename": str(log_file),
            "encoding": "utf-8",
            "level": level or "DEBUG",
        }
        config["loggers"]["dtsync"]["handlers"].append("file")

    logging.config.dictConfig(config)
