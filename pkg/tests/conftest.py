"""Shared fixtures.

The limit-cycle branch walk takes about a minute, so it runs once per
session and is shared by the branch tests and the acceptance suite.
"""

import pytest

from funnel_lab import BursterParams, fast_limit_cycle_continuation


@pytest.fixture(scope="session")
def default_params():
    return BursterParams()


@pytest.fixture(scope="session")
def cycle_branch(default_params):
    return fast_limit_cycle_continuation((-0.50, -0.45), default_params)
