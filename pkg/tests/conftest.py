"""Shared fixtures: a reference example strength matrix, self-consistent
scenarios, and random-instance builders used across tests."""

import numpy as np
import pytest

from crossimpact import (
    BranchCounts,
    InfluenceMatrix,
    PerformanceVector,
    Scenario,
    SimulationTrace,
    SubsystemSet,
    TraceStep,
    UtilityMatrix,
    compute_weights,
)

# Example 5x5 strength grid used throughout the documentation and tests
# (unit diagonal, entries on the normalized 0..1 scale).
EXAMPLE_STRENGTHS = [
    [1.0, 0.9, 0.1, 0.3, 0.2],
    [0.3, 1.0, 0.0, 0.2, 0.4],
    [0.4, 0.6, 1.0, 0.0, 0.1],
    [0.0, 0.5, 0.2, 1.0, 0.0],
    [0.7, 0.6, 0.2, 0.0, 1.0],
]


@pytest.fixture
def example_matrix() -> InfluenceMatrix:
    return InfluenceMatrix(EXAMPLE_STRENGTHS, 1)


@pytest.fixture
def uniform_utility() -> UtilityMatrix:
    return UtilityMatrix(np.full((5, 5), 0.2))


def random_influence(rng: np.random.Generator, n: int = 5, timestamp: int = 1) -> InfluenceMatrix:
    entries = rng.uniform(0.0, 1.0, size=(n, n))
    np.fill_diagonal(entries, 1.0)
    return InfluenceMatrix(entries, timestamp)


def self_consistent_scenario(
    r1: InfluenceMatrix, utility: UtilityMatrix, horizon: int = 10
) -> Scenario:
    """Seed performance computed through the forward aggregation itself,
    so a zero-delta start is an exact fixed point of the simulator."""
    w = compute_weights(r1, utility).values
    return Scenario(
        subsystems=SubsystemSet(),
        w0=PerformanceVector(w, 0),
        w1=PerformanceVector(w, 1),
        r1=InfluenceMatrix(r1.entries, 1),
        utility=utility,
        horizon=horizon,
    )


def random_trace(rng: np.random.Generator, steps: int = 8, n: int = 5) -> SimulationTrace:
    """Hand-built valid trace (not simulator output): random monotone
    timestamps starting at 2, random strengths and performance."""
    out = []
    for k in range(steps):
        t = 2 + k
        counts = BranchCounts(
            int(rng.integers(0, 5)),
            int(rng.integers(0, 5)),
            int(rng.integers(0, 5)),
            int(rng.integers(0, 2)),
        )
        out.append(
            TraceStep(
                t,
                PerformanceVector(rng.uniform(0.0, 1.0, size=n), t),
                random_influence(rng, n, t),
                counts,
            )
        )
    return SimulationTrace(tuple(out))
