import numpy as np
import pytest

from homodyne_bell import (
    ChannelSetting,
    DetectorConfig,
    ExperimentConfig,
    SettingsSchedule,
    SourceConfig,
)

_ACCEPTANCE_LINES = []


def make_config(thetas=(np.pi / 2, np.pi / 4, np.pi / 2, -np.pi / 2), source=None, detector=None, **schedule):
    a, ap, b, bp = (ChannelSetting(t) for t in thetas)
    return ExperimentConfig(
        SettingsSchedule(a, ap, b, bp, **schedule),
        source or SourceConfig(),
        detector or DetectorConfig(),
        detector or DetectorConfig(),
    )


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _record(criterion: str, passed: bool, detail: str = ""):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}" + (f": {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
