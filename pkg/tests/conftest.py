"""Shared instance builders and cached runs for the test suite."""

from __future__ import annotations

import copy

import numpy as np
import pytest

from omnical.domain import AgentSpec
from omnical.harness import resolve_config, run_experiment


def standard_raw() -> dict:
    """Two-agent strictly feasible instance (margin 0.25) on augmented d=1.

    Each agent has a decoy action whose utility is a pure offset: tempting
    while predictions are uncalibrated, realized-suboptimal and
    constraint-violating, so both CCV and swap transients are positive and
    die off as calibration kicks in.
    """
    return {
        "schema_version": 1,
        "dimension": 1,
        "horizon": 250,
        "augment": True,
        "n_features": 2,
        "agents": [
            {
                "agent_id": "alpha",
                "utility": [[0.0, 0.45], [0.8, 0.0], [0.1, 0.2]],
                "constraints": [[[0.3, -0.15], [0.0, -0.3], [-0.7, 0.3]]],
            },
            {
                "agent_id": "beta",
                "utility": [[0.0, 0.4], [0.6, 0.0]],
                "constraints": [
                    [[0.5, -0.2], [0.0, -0.35]],
                    [[0.0, -0.5], [0.0, -0.35]],
                ],
            },
        ],
        "subsequences": {"kind": "full_plus_features"},
        "adversary": {
            "kind": "iid",
            "atoms": [[0.8], [0.95]],
            "probs": [0.5, 0.5],
            "features": {"kind": "cyclic", "period": 2},
        },
        "seeds": {"adversary": 100, "sampling": 200},
    }


def dyadic_raw() -> dict:
    """Single-agent unaugmented d=1 instance tracked on dyadic intervals."""
    return {
        "schema_version": 1,
        "dimension": 1,
        "horizon": 250,
        "augment": False,
        "n_features": 1,
        "agents": [
            {
                "agent_id": "delta",
                "utility": [[1.0], [0.5]],
                "constraints": [[[0.4], [-0.8]]],
            }
        ],
        "subsequences": {"kind": "dyadic"},
        "adversary": {"kind": "iid", "atoms": [[0.6], [0.9]], "probs": [0.5, 0.5]},
        "seeds": {"adversary": 500, "sampling": 600},
    }


def piecewise_raw() -> dict:
    """Piecewise-stationary adversary with 4 switches; the utility-optimal
    feasible action flips between segments."""
    return {
        "schema_version": 1,
        "dimension": 1,
        "horizon": 200,
        "augment": True,
        "n_features": 1,
        "dp_budget": 4,
        "agents": [
            {
                "agent_id": "gamma",
                "utility": [[1.0, 0.0], [0.9, 0.0], [0.0, 0.55]],
                "constraints": [[[0.6, -0.2], [0.0, -0.5], [-0.1, -0.45]]],
            }
        ],
        "subsequences": {"kind": "dyadic"},
        "adversary": {
            "kind": "piecewise",
            "segments": [
                {"fraction": 0.2, "atoms": [[0.85], [0.95]], "probs": [0.5, 0.5]},
                {"fraction": 0.2, "atoms": [[0.15], [0.25]], "probs": [0.5, 0.5]},
                {"fraction": 0.2, "atoms": [[0.85], [0.95]], "probs": [0.5, 0.5]},
                {"fraction": 0.2, "atoms": [[0.15], [0.25]], "probs": [0.5, 0.5]},
                {"fraction": 0.2, "atoms": [[0.85], [0.95]], "probs": [0.5, 0.5]},
            ],
        },
        "seeds": {"adversary": 300, "sampling": 400},
    }


def d2_raw() -> dict:
    """Two-dimensional (augmented to 3) instance for the standard suite."""
    return {
        "schema_version": 1,
        "dimension": 2,
        "horizon": 500,
        "augment": True,
        "n_features": 1,
        "agents": [
            {
                "agent_id": "omega",
                "utility": [[0.0, 0.0, 0.5], [0.5, 0.3, 0.0], [0.2, 0.1, 0.1]],
                "constraints": [
                    [[0.4, 0.2, -0.3], [0.0, 0.0, -0.4], [-0.3, -0.2, 0.1]]
                ],
            }
        ],
        "subsequences": {"kind": "full"},
        "adversary": {
            "kind": "iid",
            "atoms": [[0.7, 0.6], [0.9, 0.8], [0.6, 0.9]],
            "probs": [0.4, 0.3, 0.3],
        },
        "seeds": {"adversary": 700, "sampling": 800},
    }


def golden_raw() -> dict:
    """Tiny fixed-seed config whose transcript bytes are frozen."""
    return {
        "schema_version": 1,
        "dimension": 1,
        "horizon": 10,
        "augment": True,
        "n_features": 1,
        "agents": [
            {
                "agent_id": "alpha",
                "utility": [[0.0, 0.45], [0.8, 0.0], [0.1, 0.2]],
                "constraints": [[[0.3, -0.15], [0.0, -0.3], [-0.7, 0.3]]],
            }
        ],
        "subsequences": {"kind": "full"},
        "adversary": {"kind": "iid", "atoms": [[0.8], [0.95]], "probs": [0.5, 0.5]},
        "seeds": {"adversary": 11, "sampling": 22},
    }


def worked_agent() -> AgentSpec:
    """Three-action, one-constraint instance used across modules."""
    return AgentSpec(
        "worked",
        np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]),
        np.array([[[1.0, -1.0], [-1.0, 1.0], [-0.5, -0.5]]]),
    )


@pytest.fixture(scope="session")
def golden_result():
    cfg = resolve_config(golden_raw())
    return run_experiment(cfg)


@pytest.fixture(scope="session")
def standard_run_250():
    cfg = resolve_config(standard_raw(), horizon=250)
    return cfg, run_experiment(cfg)


def raw_with(raw: dict, **updates) -> dict:
    out = copy.deepcopy(raw)
    out.update(updates)
    return out
