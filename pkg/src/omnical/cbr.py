"""Stateless constrained best response to a prediction.

Given a prediction p, an agent discards every action whose predicted
constraint value exceeds the rule tolerance and then maximizes predicted
utility over what remains. Ties break to the lowest action index; when
nothing is predicted feasible the agent falls back to action 0.

Tolerance 0 is the strict rule; a positive tolerance gives the relaxed
rule used for zero-margin benchmarks. The tolerance lives in the rule
config, not the agent, so one agent can run both regimes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import FEASIBILITY_ATOL, AgentSpec, DomainError


@dataclass(frozen=True)
class DecisionRuleConfig:
    """tolerance >= 0; 0 recovers the strict rule."""

    tolerance: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tolerance <= 1.0:
            raise DomainError(f"tolerance {self.tolerance} outside [0,1]")


STRICT_RULE = DecisionRuleConfig(0.0)


@dataclass(frozen=True)
class CbrResult:
    action: int
    feasible_set_empty: bool


def predicted_infeasible(
    agent: AgentSpec, j: int, action: int, p: np.ndarray, tolerance: float = 0.0
) -> bool:
    """True iff c_j(action, p) > tolerance, with a 1e-9 absolute slack."""
    val = float(agent.constraint_weights[j, action] @ np.asarray(p, dtype=float))
    return val > tolerance + FEASIBILITY_ATOL


def cbr_batch(
    agent: AgentSpec, points: np.ndarray, rule: DecisionRuleConfig = STRICT_RULE
) -> tuple[np.ndarray, np.ndarray]:
    """Constrained best responses for a batch of predictions.

    points has shape (n, d). Returns (actions, empty_flags) of length n.
    Vectorized so the forecaster can precompute responses over a whole
    prediction grid once per run.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    utils = pts @ agent.utility_weights.T  # (n, A)
    if agent.constraint_count:
        cons = np.einsum("jad,nd->nja", agent.constraint_weights, pts)
        feasible = np.all(cons <= rule.tolerance + FEASIBILITY_ATOL, axis=1)  # (n, A)
    else:
        feasible = np.ones((n, agent.action_count), dtype=bool)
    empty = ~feasible.any(axis=1)
    masked = np.where(feasible, utils, -np.inf)
    # argmax returns the first maximizer, i.e. the lowest action index
    actions = np.argmax(masked, axis=1)
    actions[empty] = 0  # fallback: lowest action index
    return actions.astype(int), empty


def cbr(
    agent: AgentSpec, p: np.ndarray, rule: DecisionRuleConfig = STRICT_RULE
) -> CbrResult:
    """Single-prediction constrained best response."""
    actions, empty = cbr_batch(agent, np.asarray(p, dtype=float)[None, :], rule)
    return CbrResult(action=int(actions[0]), feasible_set_empty=bool(empty[0]))


def infeasibility_matrix(
    agent: AgentSpec, points: np.ndarray, rule: DecisionRuleConfig = STRICT_RULE
) -> np.ndarray:
    """Boolean (J, A, n) array: action a predicted to violate constraint j at p."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not agent.constraint_count:
        return np.zeros((0, agent.action_count, pts.shape[0]), dtype=bool)
    cons = np.einsum("jad,nd->jan", agent.constraint_weights, pts)
    return cons > rule.tolerance + FEASIBILITY_ATOL
