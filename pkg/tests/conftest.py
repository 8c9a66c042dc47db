"""Shared fixtures: reference scenarios and the big Monte Carlo runs.

The expensive simulation runs are session-scoped and reused by the module
tests and the acceptance suite; seeds are fixed so every assertion is
reproducible.
"""

import math
from dataclasses import replace

import pytest

from hetuplink import montecarlo
from hetuplink.association import association_probabilities
from hetuplink.scenario import default_scenario, three_tier_scenario, validate

SEED = 20260810

ASSOCIATION_TRIALS = 100_000
COVERAGE_TRIALS = 100_000


def reduced_two_tier(sigma=25.0, noise_power=2e-3):
    """Two tiers, all-LOS, alpha = 2, unit intercept, noise scaled so the
    coverage denominators are exercised at practical thresholds."""
    base = default_scenario(sigma)
    channel = replace(
        base.channel,
        blockage_epsilon=0.0,
        alpha_nlos=2.0,
        kappa_los=1.0,
        kappa_nlos=1.0,
    )
    return validate(replace(base, channel=channel, noise_power=noise_power))


@pytest.fixture(scope="session")
def table1():
    return default_scenario()


@pytest.fixture(scope="session")
def table1_events(table1):
    return association_probabilities(table1)


@pytest.fixture(scope="session")
def remark1():
    return reduced_two_tier()


@pytest.fixture(scope="session")
def three_tier():
    return three_tier_scenario()


@pytest.fixture(scope="session")
def drops_sigma25(table1):
    """Full SINR simulation of the reference scenario (shared by the
    association, coverage, distribution and rate checks)."""
    return montecarlo.simulate_samples(table1, COVERAGE_TRIALS, SEED)


@pytest.fixture(scope="session")
def assoc_sigma10():
    scenario = default_scenario(sigma=10.0)
    return (
        scenario,
        montecarlo.simulate_samples(scenario, ASSOCIATION_TRIALS, SEED + 1, sinr=False),
    )


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def event_frequencies(samples, num_tiers):
    import numpy as np

    counts = np.bincount(samples.event, minlength=2 * (num_tiers + 1))
    return {
        (j, s): counts[montecarlo.event_index(j, s)] / samples.trials
        for j in range(0, num_tiers + 1)
        for s in montecarlo.EVENT_STATES
    }
