import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wavecoh.series import TimeSeries, write_csv  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20140228)


@pytest.fixture
def make_csv(tmp_path):
    """Write a single-column daily CSV and return its path."""

    def make(name, values, start="2012-01-01", column="value"):
        ts = TimeSeries(column, dt.date.fromisoformat(start), values)
        return write_csv(tmp_path / f"{name}.csv", ts)

    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
