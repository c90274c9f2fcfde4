"""Shared fixtures: seeded problem generators used across the test suite.

The random populations intentionally reuse the generators behind the CLI
verification suites so that `pytest` and `helmrad verify` exercise the same
distributions.
"""

import numpy as np
import pytest

from helmrad.cli import _random_alternating, _random_spec


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture
def random_spec():
    return _random_spec


@pytest.fixture
def random_alternating():
    return _random_alternating


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
