from __future__ import annotations

import json

import numpy as np
import pytest

from testutil import triangle_topo


@pytest.fixture
def triangle():
    return triangle_topo()


@pytest.fixture
def topology_file(tmp_path):
    """Write a topology JSON file and return its path."""

    def write(obj, name="topology.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return path

    return write


@pytest.fixture
def throughput_file(tmp_path):
    """Write a throughput CSV and return its path."""

    def write(link_ids, timestamps, rows, name="throughput.csv"):
        lines = ["timestamp," + ",".join(link_ids)]
        for ts, row in zip(timestamps, rows):
            lines.append(",".join([str(ts)] + [repr(float(v)) for v in row]))
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return write


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
