"""Brute-force reference implementations for tests.

These scan exhaustively with plain loops, share nothing with the primary
code paths beyond the domain types, run under hard size caps, and abort
loudly above them. They are never on the hot path.

Scalar evaluation accumulates coordinates in ascending order, matching the
documented accumulation order of the metrics module, so value comparisons
against the primaries are exact rather than within an epsilon.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .domain import AgentSpec, DomainError, SubsequenceSpec, Transcript

_ATOL = 1e-9  # same strict-infeasibility slack the decision rule documents


class OracleCapExceeded(DomainError):
    pass


def _dot(weights, vec) -> float:
    val = 0.0
    for i in range(len(vec)):
        val += weights[i] * vec[i]
    return val


def brute_cbr(agent: AgentSpec, p: np.ndarray, tolerance: float = 0.0) -> tuple[int, bool]:
    """Exhaustive constrained best response: (action, feasible_set_empty)."""
    p = np.asarray(p, dtype=float)
    best_action = None
    best_util = -math.inf
    for a in range(agent.action_count):
        feasible = True
        for j in range(agent.constraint_count):
            if _dot(agent.constraint_weights[j, a], p) > tolerance + _ATOL:
                feasible = False
                break
        if not feasible:
            continue
        util = _dot(agent.utility_weights[a], p)
        if util > best_util:  # strict: ties keep the lowest index
            best_util = util
            best_action = a
    if best_action is None:
        return 0, True
    return best_action, False


def _member_rounds(transcript: Transcript, subseq: SubsequenceSpec) -> list[int]:
    feats = transcript.features
    return [t for t in range(1, len(transcript.rounds) + 1) if subseq.contains(t, feats[t - 1])]


def _benchmark_actions(
    transcript: Transcript, agent: AgentSpec, rounds: list[int], margin: float
) -> list[int]:
    members = []
    for a in range(agent.action_count):
        ok = True
        for t in rounds:
            y = transcript.rounds[t - 1].outcome
            for j in range(agent.constraint_count):
                if _dot(agent.constraint_weights[j, a], y) > -margin:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            members.append(a)
    return members


def _action_utility_sums(
    transcript: Transcript, agent: AgentSpec, rounds: list[int]
) -> np.ndarray:
    """sums[a, b] = total utility of action b over the member rounds where
    the agent played a (rounds accumulated in ascending order)."""
    n = agent.action_count
    played = transcript.actions_of(agent.agent_id)
    sums = np.zeros((n, n))
    for t in rounds:
        y = transcript.rounds[t - 1].outcome
        a = int(played[t - 1])
        for b in range(n):
            sums[a, b] += _dot(agent.utility_weights[b], y)
    return sums


def brute_swap(
    transcript: Transcript, agent: AgentSpec, subseq: SubsequenceSpec, margin: float
) -> float | None:
    """Maximize over every action modification map into the benchmark set."""
    if agent.action_count > 4:
        raise OracleCapExceeded("brute_swap capped at 4 actions")
    rounds = _member_rounds(transcript, subseq)
    bench = _benchmark_actions(transcript, agent, rounds, margin)
    if not bench:
        return None
    played = transcript.actions_of(agent.agent_id)
    played_set = sorted({int(played[t - 1]) for t in rounds})
    sums = _action_utility_sums(transcript, agent, rounds)
    best = -math.inf
    for phi in itertools.product(bench, repeat=agent.action_count):
        total = 0.0
        for a in played_set:
            total += sums[a, phi[a]] - sums[a, a]
        best = max(best, total)
    return best if rounds else 0.0


def brute_minmax(
    q: np.ndarray, fire: np.ndarray, grid_points: np.ndarray, simplex_step: float
) -> float:
    """Grid search the prediction game over a discretized simplex.

    q has shape (n_events, d, 2) and fire (n_events, N); only d = 1 with
    N <= 3 grid points and at most 4 events is supported. The inner maximum
    over outcomes is closed form per coordinate.
    """
    n_events, d = q.shape[0], q.shape[1]
    n = grid_points.shape[0]
    if d != 1 or n > 3 or n_events > 4:
        raise OracleCapExceeded("brute_minmax caps: d=1, <=3 grid points, <=4 events")
    steps = int(round(1.0 / simplex_step))
    delta = q[:, 0, 0] - q[:, 0, 1]  # (n_events,)
    best = math.inf
    for comp in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(comp) > steps:
            continue
        weights = [c / steps for c in comp] + [(steps - sum(comp)) / steps]
        c_term = 0.0
        d_term = 0.0
        for g in range(n):
            fire_weight = 0.0
            for e in range(n_events):
                fire_weight += delta[e] * fire[e, g]
            c_term += weights[g] * fire_weight * grid_points[g, 0]
            d_term += weights[g] * fire_weight
        value = c_term + max(0.0, -d_term)
        best = min(best, value)
    return best


def brute_dynamic(
    transcript: Transcript,
    agent: AgentSpec,
    delta_budget: int,
    margin_policy,
) -> tuple[float, list[tuple[int, int]]] | None:
    """Enumerate every partition into at most delta_budget + 1 segments."""
    t_max = len(transcript.rounds)
    if t_max > 10:
        raise OracleCapExceeded("brute_dynamic capped at T <= 10")
    if t_max == 0:
        return 0.0, []
    played = transcript.actions_of(agent.agent_id)
    best_val = -math.inf
    best_parts: list[tuple[int, int]] = []
    max_segments = min(delta_budget + 1, t_max)
    for k in range(1, max_segments + 1):
        for cuts in itertools.combinations(range(2, t_max + 1), k - 1):
            bounds = [1] + list(cuts) + [t_max + 1]
            total = 0.0
            feasible = True
            parts = []
            for si in range(k):
                s, e = bounds[si], bounds[si + 1] - 1
                lam = margin_policy.margin_for(e - s + 1)
                rounds = list(range(s, e + 1))
                bench = _benchmark_actions(transcript, agent, rounds, lam)
                if not bench:
                    feasible = False
                    break
                sums = _action_utility_sums(transcript, agent, rounds)
                seg_total = 0.0
                for a in sorted({int(played[t - 1]) for t in rounds}):
                    best_b = -math.inf
                    for b in bench:
                        best_b = max(best_b, sums[a, b])
                    seg_total += best_b
                total += seg_total
                parts.append((s, e))
            if feasible and total > best_val:
                best_val = total
                best_parts = parts
    if best_val == -math.inf:
        return None
    return best_val, best_parts
