"""Shared fixtures: the retransmission utility and its equilibrium target."""
from __future__ import annotations

import pytest

from cdma_nash.game import goodput, solve_beta_star


@pytest.fixture(scope="session")
def util100():
    return goodput(100)


@pytest.fixture(scope="session")
def beta_star(util100):
    return solve_beta_star(util100).beta_star
