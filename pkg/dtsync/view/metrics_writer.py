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

"""CSV sinks for per-episode metrics and sweep tables.

Each row is rendered in memory and written with a single ``write`` followed
by ``flush``, so an interrupted run leaves only whole rows behind. Floats are
rendered with ``repr`` and missing values as empty cells.
"""

# Standard Library Imports
import csv
import io
import logging
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, List, Optional, Union

# Third Party Imports

# Local Imports

logger = logging.getLogger(__name__)


@dataclass
class MetricsRow:
    """One completed episode."""

    epoch: int
    step: int
    episode: int
    #: float: Undiscounted sum of unscaled rewards.
    episode_return: float
    #: float: Mean per-slot objective T in seconds.
    mean_latency: float
    #: float: Mean t_dt over UD-slot pairs in seconds.
    mean_sync_latency: float
    deadline_penalty: float
    energy_penalty: float
    edge_penalty: float
    deadline_violations: int
    energy_violations: int
    edge_violations: int
    alpha: Optional[float] = None
    critic_loss1: Optional[float] = None
    critic_loss2: Optional[float] = None


@dataclass
class SweepRow:
    """Evaluation summary of one sweep point."""

    axis: str
    value: float
    policy: str
    seed: int
    mean_latency: Optional[float] = None
    std_latency: Optional[float] = None
    mean_sync_latency: Optional[float] = None
    deadline_violation_rate: Optional[float] = None
    energy_violation_rate: Optional[float] = None
    edge_violation_rate: Optional[float] = None
    #: str: ``ok`` or ``failed``.
    status: str = "ok"
    error: str = ""


def format_cell(value) -> str:
    """Render one cell: repr for floats, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        # numpy scalars subclass float but repr as np.float64(...)
        value = float(value)
        return "" if math.isnan(value) else repr(value)
    return str(value)


class CsvSink:
    """Append-only CSV file with a fixed header.

    Parameters
    ----------
    path : str or Path
        Destination file; parent directories are created.
    row_type : type
        Dataclass whose fields define the columns.
    """

    def __init__(self, path: Union[str, Path], row_type: type):
        #: Path: Destination file.
        self.path = Path(path)

        #: tuple: Column names.
        self.columns = tuple(f.name for f in fields(row_type))

        #: int: Rows written so far.
        self.rows_written = 0

        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "w", encoding="utf-8", newline="")
        self._write_line(self.columns)

    def _write_line(self, cells: Iterable[str]) -> None:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator="\n").writerow(cells)
        self._handle.write(buffer.getvalue())
        self._handle.flush()

    def write(self, row) -> None:
        """Append one row."""
        self._write_line(format_cell(value) for value in astuple(row))
        self.rows_written += 1

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self) -> "CsvSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class MetricsWriter(CsvSink):
    """Per-episode training or rollout metrics."""

    def __init__(self, path: Union[str, Path]):
        super().__init__(path, MetricsRow)


class SweepWriter(CsvSink):
    """Tidy sweep table: one row per (axis value, policy)."""

    def __init__(self, path: Union[str, Path]):
        super().__init__(path, SweepRow)


def read_rows(path: Union[str, Path]) -> List[dict]:
    """Read a CSV written by one of the sinks back as dictionaries."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))
