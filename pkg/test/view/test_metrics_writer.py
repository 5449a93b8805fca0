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

# Third Party Imports
import numpy as np
import pytest

# Local Imports
from dtsync.view.metrics_writer import (
    MetricsRow,
    MetricsWriter,
    SweepRow,
    SweepWriter,
    format_cell,
    read_rows,
)


def metrics_row(episode: int, **extra) -> MetricsRow:
    return MetricsRow(
        epoch=0,
        step=25 * (episode + 1),
        episode=episode,
        episode_return=-41.25 - episode,
        mean_latency=1.6,
        mean_sync_latency=0.1 + 0.2,
        deadline_penalty=0.0,
        energy_penalty=0.5,
        edge_penalty=0.0,
        deadline_violations=0,
        energy_violations=3,
        edge_violations=0,
        **extra,
    )


@pytest.mark.parametrize(
    "value, text",
    [
        (None, ""),
        (float("nan"), ""),
        (np.float64(0.1), "0.1"),
        (0.1 + 0.2, "0.30000000000000004"),
        (1e-12, "1e-12"),
        (np.int64(7), "7"),
        (True, "1"),
        ("ok", "ok"),
    ],
)
def test_cell_rendering(value, text):
    assert format_cell(value) == text


def test_metrics_file_layout(tmp_path):
    path = tmp_path / "run" / "metrics.csv"
    with MetricsWriter(path) as writer:
        writer.write(metrics_row(0))
        writer.write(metrics_row(1, alpha=0.5, critic_loss1=float("nan"), critic_loss2=2.0))
        assert writer.rows_written == 2

    lines = path.read_text().splitlines()
    assert lines[0] == (
        "epoch,step,episode,episode_return,mean_latency,mean_sync_latency,"
        "deadline_penalty,energy_penalty,edge_penalty,deadline_violations,"
        "energy_violations,edge_violations,alpha,critic_loss1,critic_loss2"
    )
    assert lines[1] == "0,25,0,-41.25,1.6,0.30000000000000004,0.0,0.5,0.0,0,3,0,,,"
    assert lines[2].endswith(",0.5,,2.0")

    rows = read_rows(path)
    assert [float(r["episode_return"]) for r in rows] == [-41.25, -42.25]


def test_rows_are_visible_before_close(tmp_path):
    path = tmp_path / "metrics.csv"
    writer = MetricsWriter(path)
    writer.write(metrics_row(0))
    # every row is flushed as soon as it is written
    assert len(path.read_text().splitlines()) == 2
    assert path.read_text().endswith("\n")
    writer.close()
    writer.close()


def test_sweep_rows(tmp_path):
    path = tmp_path / "sweep.csv"
    with SweepWriter(path) as writer:
        writer.write(SweepRow(axis="K", value=2.0, policy="greedy", seed=0, mean_latency=1.5))
        writer.write(
            SweepRow(
                axis="K", value=4.0, policy="sac", seed=0, status="failed", error="diverged, alpha=inf"
            )
        )
    rows = read_rows(path)
    assert rows[0]["status"] == "ok"
    assert rows[0]["mean_latency"] == "1.5"
    assert rows[0]["std_latency"] == ""
    assert rows[1]["status"] == "failed"
    assert rows[1]["error"] == "diverged, alpha=inf"
