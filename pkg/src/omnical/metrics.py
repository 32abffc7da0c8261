"""Audits of a finished run: constraint violation, regret, calibration bias.

All operations are pure functions of an immutable transcript plus agent
specs; nothing here touches forecaster internals. Empty benchmark classes
yield None ("undefined") rather than 0 or infinity, and the undefined
marker propagates to the emitted tables.

Utility and constraint tables accumulate coordinates in ascending order
(see _utility_table) so results agree exactly with the brute-force oracles
used in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cbr import DecisionRuleConfig, cbr_batch, infeasibility_matrix
from .domain import (
    AgentSpec,
    DomainError,
    MarginPolicy,
    SubsequenceSpec,
    Transcript,
)
from .events import EventRegistry


def _member_indices(transcript: Transcript, subseq: SubsequenceSpec) -> np.ndarray:
    feats = transcript.features
    return np.array(
        [t - 1 for t in range(1, len(transcript.rounds) + 1) if subseq.contains(t, feats[t - 1])],
        dtype=int,
    )


def _utility_table(outcomes: np.ndarray, agent: AgentSpec) -> np.ndarray:
    """U[t, b] = u(b, y_t), accumulated coordinate by coordinate."""
    n_rounds = outcomes.shape[0]
    table = np.zeros((n_rounds, agent.action_count))
    for i in range(agent.dimension):
        table += np.outer(outcomes[:, i], agent.utility_weights[:, i])
    return table


def _constraint_table(outcomes: np.ndarray, agent: AgentSpec) -> np.ndarray:
    """C[t, j, a] = c_j(a, y_t), accumulated coordinate by coordinate."""
    n_rounds = outcomes.shape[0]
    table = np.zeros((n_rounds, agent.constraint_count, agent.action_count))
    for i in range(agent.dimension):
        table += outcomes[:, i][:, None, None] * agent.constraint_weights[None, :, :, i]
    return table


# ---------------------------------------------------------------------------
# CCV and benchmarks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CcvResult:
    per_constraint: np.ndarray  # (J,)
    max_violation: float


def ccv(transcript: Transcript, agent: AgentSpec, subseq: SubsequenceSpec) -> CcvResult:
    """Cumulative constraint violation: per-constraint sums and their max.

    Empty subsequences and constraint-free agents return zeros.
    """
    rows = _member_indices(transcript, subseq)
    if agent.constraint_count == 0 or rows.size == 0:
        return CcvResult(np.zeros(agent.constraint_count), 0.0)
    outcomes = transcript.outcomes()[rows]
    played = transcript.actions_of(agent.agent_id)[rows]
    table = _constraint_table(outcomes, agent)  # (|S|, J, A)
    per_round = table[np.arange(rows.size), :, played]  # (|S|, J)
    sums = np.zeros(agent.constraint_count)
    for k in range(rows.size):  # ascending rounds, matching hand sums
        sums += per_round[k]
    return CcvResult(sums, float(sums.max()))


@dataclass(frozen=True)
class BenchmarkSet:
    subseq_id: str
    margin: float
    actions: tuple[int, ...]
    empty: bool


def benchmark_set(
    transcript: Transcript, agent: AgentSpec, subseq: SubsequenceSpec, margin: float
) -> BenchmarkSet:
    """Actions feasible with the given margin at every member round.

    The empty subsequence yields the full action set (empty intersection).
    """
    if margin < 0.0:
        raise DomainError("benchmark margin must be nonnegative")
    rows = _member_indices(transcript, subseq)
    if rows.size == 0 or agent.constraint_count == 0:
        actions = tuple(range(agent.action_count))
        return BenchmarkSet(subseq.subseq_id, margin, actions, False)
    table = _constraint_table(transcript.outcomes()[rows], agent)
    worst = table.max(axis=(0, 1))  # (A,)
    actions = tuple(int(a) for a in np.nonzero(worst <= -margin)[0])
    return BenchmarkSet(subseq.subseq_id, margin, actions, not actions)


def external_regret(
    transcript: Transcript, agent: AgentSpec, subseq: SubsequenceSpec, margin: float
) -> float | None:
    """Best fixed benchmark action's advantage; None if the benchmark is empty."""
    bench = benchmark_set(transcript, agent, subseq, margin)
    if bench.empty:
        return None
    rows = _member_indices(transcript, subseq)
    if rows.size == 0:
        return 0.0
    table = _utility_table(transcript.outcomes()[rows], agent)
    played = transcript.actions_of(agent.agent_id)[rows]
    realized = 0.0
    for k in range(rows.size):
        realized += table[k, played[k]]
    best = max(float(table[:, b].sum()) for b in bench.actions)
    return best - realized


def swap_regret(
    transcript: Transcript, agent: AgentSpec, subseq: SubsequenceSpec, margin: float
) -> float | None:
    """Per-action decomposition of the best modification rule into the
    benchmark set; None if the benchmark is empty."""
    bench = benchmark_set(transcript, agent, subseq, margin)
    if bench.empty:
        return None
    rows = _member_indices(transcript, subseq)
    if rows.size == 0:
        return 0.0
    table = _utility_table(transcript.outcomes()[rows], agent)
    played = transcript.actions_of(agent.agent_id)[rows]
    sums = np.zeros((agent.action_count, agent.action_count))
    np.add.at(sums, played, table)  # sums[a, b]: utility of b on a-rounds
    bench_idx = np.array(bench.actions, dtype=int)
    total = 0.0
    for a in sorted(set(int(a) for a in played)):
        total += float(sums[a, bench_idx].max()) - float(sums[a, a])
    return total


# ---------------------------------------------------------------------------
# Adaptive and dynamic regret
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdaptiveResult:
    value: float
    witness: tuple[int, int]  # (start, end) of the argmax interval


def adaptive_regret(
    transcript: Transcript,
    agent: AgentSpec,
    intervals: list[SubsequenceSpec],
    policy: MarginPolicy,
) -> AdaptiveResult | None:
    """Max swap regret over an interval family, margin set per length.

    Intervals with empty benchmarks are skipped; None when all are.
    """
    best: AdaptiveResult | None = None
    for spec in intervals:
        if spec.kind != "interval":
            raise DomainError("adaptive regret expects interval subsequences")
        length = spec.end - spec.start + 1
        val = swap_regret(transcript, agent, spec, policy.margin_for(length))
        if val is None:
            continue
        if best is None or val > best.value:
            best = AdaptiveResult(val, (spec.start, spec.end))
    return best


@dataclass(frozen=True)
class DynamicResult:
    value: float  # best piecewise benchmark utility total
    segments: tuple[tuple[int, int], ...]
    regret: float  # value minus the realized utility total


def dynamic_benchmark_dp(
    transcript: Transcript,
    agent: AgentSpec,
    delta_budget: int,
    policy: MarginPolicy,
    cap: int = 600,
) -> DynamicResult | None:
    """Optimal piecewise swap benchmark with at most delta_budget changes.

    segval(s, e) is the per-action-decomposed best benchmark utility of the
    segment with margin policy(e - s + 1), or -inf when that benchmark is
    empty; a dynamic program then maximizes over partitions into at most
    delta_budget + 1 segments. Returns None when no feasible segmentation
    exists.
    """
    t_max = len(transcript.rounds)
    if t_max > cap:
        raise DomainError(f"dynamic DP capped at T <= {cap}, got {t_max}")
    if delta_budget < 0:
        raise DomainError("delta budget must be nonnegative")
    if t_max == 0:
        return DynamicResult(0.0, (), 0.0)

    outcomes = transcript.outcomes()
    played = transcript.actions_of(agent.agent_id)
    n_act = agent.action_count
    table = _utility_table(outcomes, agent)
    if agent.constraint_count:
        worst_by_round = _constraint_table(outcomes, agent).max(axis=1)  # (T, A)
    else:
        worst_by_round = np.full((t_max, n_act), -np.inf)

    neg_inf = -math.inf
    segval = np.full((t_max + 2, t_max + 1), neg_inf)
    for s in range(1, t_max + 1):
        runworst = np.full(n_act, -np.inf)
        acc = np.zeros((n_act, n_act))
        seen = np.zeros(n_act, dtype=bool)
        for e in range(s, t_max + 1):
            a_e = played[e - 1]
            acc[a_e] += table[e - 1]
            seen[a_e] = True
            runworst = np.maximum(runworst, worst_by_round[e - 1])
            lam = policy.margin_for(e - s + 1)
            feas = runworst <= -lam
            if feas.any():
                best = acc[:, feas].max(axis=1)
                val = 0.0
                for a in np.nonzero(seen)[0]:  # ascending action index
                    val += best[a]
                segval[s, e] = val

    max_segments = min(delta_budget + 1, t_max)
    f = np.full((max_segments + 1, t_max + 1), neg_inf)
    arg = np.zeros((max_segments + 1, t_max + 1), dtype=int)
    f[0, 0] = 0.0
    for k in range(1, max_segments + 1):
        for e in range(1, t_max + 1):
            cand = f[k - 1, 0:e] + segval[1 : e + 1, e]
            s_best = int(np.argmax(cand))
            if cand[s_best] > neg_inf:
                f[k, e] = cand[s_best]
                arg[k, e] = s_best + 1
    k_best = -1
    for k in range(1, max_segments + 1):
        if f[k, t_max] > neg_inf and (k_best < 0 or f[k, t_max] > f[k_best, t_max]):
            k_best = k
    if k_best < 0:
        return None
    segments: list[tuple[int, int]] = []
    e = t_max
    k = k_best
    while k > 0:
        s = arg[k, e]
        segments.append((int(s), int(e)))
        e = s - 1
        k -= 1
    segments.reverse()
    realized = 0.0
    for t in range(t_max):
        realized += table[t, played[t]]
    value = float(f[k_best, t_max])
    return DynamicResult(value, tuple(segments), value - realized)


# ---------------------------------------------------------------------------
# Calibration bias audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiasAudit:
    vectors: np.ndarray  # (n_events, d) signed bias sums
    linf: np.ndarray  # (n_events,)
    counts: np.ndarray  # (n_events,) activation counts

    def max_linf(self, indices: np.ndarray | None = None) -> float:
        if indices is None:
            return float(self.linf.max()) if self.linf.size else 0.0
        return float(self.linf[indices].max()) if indices.size else 0.0


def calibration_bias(transcript: Transcript, registry: EventRegistry) -> BiasAudit:
    """Recompute per-event bias sums and activation counts from the raw
    transcript, independent of any forecaster state."""
    n_events = len(registry)
    dim = transcript.dimension + (1 if transcript.augment else 0)
    vectors = np.zeros((n_events, dim))
    counts = np.zeros(n_events, dtype=int)
    rule = registry.rule
    for rec in transcript.rounds:
        mask = registry.active_subseq_mask(rec.t, rec.feature)
        if not mask.any():
            continue
        active_sids = [s.subseq_id for s, m in zip(registry.subsequences, mask) if m]
        diff = rec.prediction - rec.outcome
        for ag in registry.agents:
            chosen, _ = cbr_batch(ag, rec.prediction[None, :], rule)
            chosen = int(chosen[0])
            infeas = infeasibility_matrix(ag, rec.prediction[None, :], rule)[:, :, 0]
            # event value block in registry order: per action, the decision
            # event then the per-constraint infeasibility events
            block = np.zeros(ag.action_count * (1 + ag.constraint_count))
            view = block.reshape(ag.action_count, 1 + ag.constraint_count)
            view[chosen, 0] = 1.0
            if ag.constraint_count:
                view[:, 1:] = infeas.T
            for sid in active_sids:
                idx = registry.by_agent_subseq[(ag.agent_id, sid)]
                vectors[idx] += block[:, None] * diff[None, :]
                counts[idx] += block.astype(int)
    linf = np.abs(vectors).max(axis=1) if dim else np.zeros(n_events)
    return BiasAudit(vectors, linf, counts)


# ---------------------------------------------------------------------------
# Theoretical envelopes (diagnostics, not runtime assertions)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeParams:
    """Problem-size parameters entering the high-probability envelopes.

    c0 is a fitted diagnostic constant; the envelope shapes hide absolute
    constants, so trend checks rather than envelope values are what the
    acceptance suite asserts.
    """

    lipschitz_u: float
    lipschitz_c: float
    dimension: int
    n_constraints: int
    n_actions: int
    n_agents: int
    n_subseqs: int
    horizon: int
    delta: float = 0.05
    c0: float = 1.0

    def log_term(self) -> float:
        inner = (
            max(self.dimension, 1)
            * max(self.n_constraints, 1)
            * max(self.n_actions, 1)
            * max(self.n_agents, 1)
            * max(self.n_subseqs, 1)
            * max(self.horizon, 1)
            / self.delta
        )
        return math.log(max(inner, math.e))


def bias_envelope(params: EnvelopeParams, subseq_len: int, event_count: float) -> float:
    """c0 (log * |S|^{1/4} + sqrt(log * T_E)): the alpha and beta shape."""
    lg = params.log_term()
    return params.c0 * (lg * subseq_len**0.25 + math.sqrt(lg * max(event_count, 0.0)))


def inverse_count_bound(params: EnvelopeParams, subseq_len: int, ratio: float) -> float:
    """f(ratio) solving x / envelope(x) = ratio, by bisection.

    Monotone since the envelope is concave and sublinear; this is the bound
    on how often a margin-feasible action can be predicted infeasible.
    """
    if ratio <= 0.0:
        return 0.0
    if math.isinf(ratio):
        return math.inf

    def g(x: float) -> float:
        return x / bias_envelope(params, subseq_len, x) if x > 0 else 0.0

    hi = 1.0
    for _ in range(400):
        if g(hi) >= ratio:
            break
        hi *= 2.0
    else:
        return math.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EnvelopeResult:
    alpha_value: float
    beta_value: float
    f_beta_value: float
    ccv_envelope: float
    swap_envelope: float


def envelopes(
    params: EnvelopeParams,
    subseq_len: int,
    event_count: float,
    margin: float | None = None,
    tolerance: float | None = None,
) -> EnvelopeResult:
    """Composed CCV and swap-regret envelopes.

    Exactly one of margin (strict decision rule) or tolerance (relaxed rule
    against the zero-margin benchmark) must be given. The relaxed CCV form
    carries the extra tolerance * |S| term.
    """
    if (margin is None) == (tolerance is None):
        raise DomainError("give exactly one of margin or tolerance")
    slack = margin if margin is not None else tolerance
    alpha_val = bias_envelope(params, subseq_len, subseq_len / max(params.n_actions, 1))
    beta_val = bias_envelope(params, subseq_len, event_count)
    ratio = math.inf if slack == 0.0 else params.lipschitz_c / slack
    f_val = inverse_count_bound(params, subseq_len, ratio)
    n_act = params.n_actions
    ccv_env = params.lipschitz_c * n_act * alpha_val + params.n_constraints * f_val
    if tolerance is not None:
        ccv_env += tolerance * subseq_len
    swap_env = (
        2.0 * params.lipschitz_u * n_act * alpha_val
        + params.n_constraints * n_act * f_val
    )
    return EnvelopeResult(alpha_val, beta_val, f_val, ccv_env, swap_env)
