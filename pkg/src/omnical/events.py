"""Calibration events the forecaster must be unbiased on.

Two event kinds per agent, gated by subsequence membership:

  decision(n, a, S)        fires at (t, x, p) iff t in S and the agent's
                           constrained best response to p is a;
  infeasibility(n, j, a, S) fires iff t in S and action a is predicted to
                           violate constraint j at p.

Only events whose subsequence is active at (t, x) are evaluated per round;
inactive events contribute exactly zero to the forecaster's objective, so
the omission is lossless. With dyadic interval families this keeps the
per-round active set at O(log T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cbr import DecisionRuleConfig, cbr_batch, infeasibility_matrix
from .domain import AgentSpec, DomainError, SubsequenceSpec, interval_subseq

DECISION = "decision"
INFEASIBILITY = "infeasibility"


class RegistryCapExceeded(DomainError):
    pass


@dataclass(frozen=True)
class EventKey:
    kind: str  # DECISION or INFEASIBILITY
    agent_id: str
    action: int
    constraint: int | None
    subseq_id: str


@dataclass
class EventRegistry:
    """Ordered event list with per-event activation counters.

    Ordering is stable across a run: agents, then actions, then the
    decision event followed by per-constraint infeasibility events, then
    subsequences. Size is sum over agents of A*(1+J)*|S|.
    """

    keys: list[EventKey]
    subsequences: list[SubsequenceSpec]
    agents: list[AgentSpec]
    rule: DecisionRuleConfig
    index: dict[EventKey, int] = field(default_factory=dict)
    by_subseq: dict[str, np.ndarray] = field(default_factory=dict)
    by_agent_subseq: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    fired_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        self.index = {k: i for i, k in enumerate(self.keys)}
        per_subseq: dict[str, list[int]] = {s.subseq_id: [] for s in self.subsequences}
        per_agent_subseq: dict[tuple[str, str], list[int]] = {}
        for i, k in enumerate(self.keys):
            per_subseq[k.subseq_id].append(i)
            per_agent_subseq.setdefault((k.agent_id, k.subseq_id), []).append(i)
        self.by_subseq = {s: np.array(ix, dtype=int) for s, ix in per_subseq.items()}
        self.by_agent_subseq = {
            k: np.array(ix, dtype=int) for k, ix in per_agent_subseq.items()
        }
        self.fired_counts = np.zeros(len(self.keys), dtype=int)
        # vectorized gating tables; explicit-round subsequences fall back to
        # per-spec membership tests
        kinds = {"interval": 0, "feature": 1, "modulo": 2, "explicit": 3}
        self._kind = np.array([kinds[s.kind] for s in self.subsequences], dtype=int)
        self._start = np.array([s.start for s in self.subsequences], dtype=int)
        self._end = np.array([s.end for s in self.subsequences], dtype=int)
        self._feature = np.array([s.feature for s in self.subsequences], dtype=int)
        self._period = np.array(
            [max(s.period, 1) for s in self.subsequences], dtype=int
        )
        self._residue = np.array([s.residue for s in self.subsequences], dtype=int)

    def __len__(self) -> int:
        return len(self.keys)

    def subseq_by_id(self, subseq_id: str) -> SubsequenceSpec:
        for s in self.subsequences:
            if s.subseq_id == subseq_id:
                return s
        raise DomainError(f"unknown subsequence {subseq_id!r}")

    def active_subseq_mask(self, t: int, x: int) -> np.ndarray:
        mask = np.zeros(len(self.subsequences), dtype=bool)
        k = self._kind
        mask |= (k == 0) & (self._start <= t) & (t <= self._end)
        mask |= (k == 1) & (self._feature == x)
        mask |= (k == 2) & (t % self._period == self._residue)
        for i in np.nonzero(k == 3)[0]:
            mask[i] = self.subsequences[i].contains(t, x)
        return mask

    def active_subseq_ids(self, t: int, x: int) -> list[str]:
        mask = self.active_subseq_mask(t, x)
        return [s.subseq_id for s, m in zip(self.subsequences, mask) if m]

    def active_indices(self, t: int, x: int) -> np.ndarray:
        parts = [self.by_subseq[sid] for sid in self.active_subseq_ids(t, x)]
        if not parts:
            return np.zeros(0, dtype=int)
        return np.concatenate(parts)

    def dump_lines(self) -> list[str]:
        """Audit dump: ordered event list with ids (schema registry.v1)."""
        lines = [f'{{"kind":"header","schema":"registry.v1","n_events":{len(self)}}}']
        for i, k in enumerate(self.keys):
            cons = "null" if k.constraint is None else str(k.constraint)
            lines.append(
                f'{{"idx":{i},"event":"{k.kind}","agent":"{k.agent_id}"'
                f',"action":{k.action},"constraint":{cons}'
                f',"subseq":"{k.subseq_id}","fired":{int(self.fired_counts[i])}}}'
            )
        return lines

    def write_dump(self, path) -> None:
        with open(path, "w") as fh:
            for line in self.dump_lines():
                fh.write(line + "\n")


def registry_size(agents: Sequence[AgentSpec], n_subseqs: int) -> int:
    return sum(
        ag.action_count * (1 + ag.constraint_count) * n_subseqs for ag in agents
    )


def build_registry(
    agents: Sequence[AgentSpec],
    subseqs: Sequence[SubsequenceSpec],
    rule: DecisionRuleConfig,
    cap: int = 50_000,
) -> EventRegistry:
    """Enumerate every decision and infeasibility event, in stable order."""
    if not subseqs:
        raise DomainError("build_registry needs a nonempty subsequence list")
    total = registry_size(agents, len(subseqs))
    if total > cap:
        raise RegistryCapExceeded(f"registry would hold {total} events, cap is {cap}")
    keys: list[EventKey] = []
    for ag in agents:
        for a in range(ag.action_count):
            for s in subseqs:
                keys.append(EventKey(DECISION, ag.agent_id, a, None, s.subseq_id))
            for j in range(ag.constraint_count):
                for s in subseqs:
                    keys.append(
                        EventKey(INFEASIBILITY, ag.agent_id, a, j, s.subseq_id)
                    )
    return EventRegistry(keys=keys, subsequences=list(subseqs), agents=list(agents), rule=rule)


def evaluate_active_events(
    registry: EventRegistry,
    t: int,
    x: int,
    p: np.ndarray,
    agents: Sequence[AgentSpec] | None = None,
    rule: DecisionRuleConfig | None = None,
) -> dict[EventKey, int]:
    """Evaluate every active event at prediction p.

    Events whose subsequence is inactive at (t, x) are omitted; active
    events map to 0 or 1. Exactly one decision event per (agent, active
    subsequence) carries a 1.
    """
    agents = list(registry.agents if agents is None else agents)
    rule = registry.rule if rule is None else rule
    active = registry.active_subseq_ids(t, x)
    if not active:
        return {}
    p = np.asarray(p, dtype=float)
    out: dict[EventKey, int] = {}
    for ag in agents:
        chosen, _ = cbr_batch(ag, p[None, :], rule)
        chosen = int(chosen[0])
        infeas = infeasibility_matrix(ag, p[None, :], rule)[:, :, 0]
        for sid in active:
            for a in range(ag.action_count):
                out[EventKey(DECISION, ag.agent_id, a, None, sid)] = int(a == chosen)
                for j in range(ag.constraint_count):
                    out[EventKey(INFEASIBILITY, ag.agent_id, a, j, sid)] = int(
                        infeas[j, a]
                    )
    return out


# ---------------------------------------------------------------------------
# Subsequence families
# ---------------------------------------------------------------------------

def dyadic_intervals(horizon: int) -> list[SubsequenceSpec]:
    """All intervals [k*2^l + 1, (k+1)*2^l], clipped at the horizon.

    Any contiguous interval is a union of O(log T) members, so unbiasedness
    on this family is the standard surrogate for the all-intervals family
    at horizons where the latter's ~T^2/2 events are out of reach.
    """
    if horizon < 1:
        raise DomainError("dyadic family needs horizon >= 1")
    specs: list[SubsequenceSpec] = []
    seen: set[tuple[int, int]] = set()
    level = 0
    while True:
        size = 1 << level
        k = 0
        while k * size + 1 <= horizon:
            start = k * size + 1
            end = min((k + 1) * size, horizon)
            # clipped tails of different levels can coincide; keep one copy.
            # ids carry the span so table consumers can parse intervals
            # without knowing the family construction
            if (start, end) not in seen:
                seen.add((start, end))
                specs.append(
                    SubsequenceSpec(
                        f"dyadic:{level}:{start}-{end}", "interval", start=start, end=end
                    )
                )
            k += 1
        if size >= horizon:
            break
        level += 1
    return specs


def all_intervals(horizon: int) -> list[SubsequenceSpec]:
    """Every contiguous interval; quadratic count, so capped at T <= 200."""
    if horizon > 200:
        raise DomainError("all-intervals family only permitted for T <= 200")
    return [
        interval_subseq(s, e)
        for s in range(1, horizon + 1)
        for e in range(s, horizon + 1)
    ]
