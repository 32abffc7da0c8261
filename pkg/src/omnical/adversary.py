"""Feature and outcome generators honoring the commitment order.

The adversary commits to the round's feature and outcome distribution
before the forecaster's prediction distribution exists: commit_round never
receives the current prediction, and the returned sampler is sealed (the
outcome is drawn at commitment time from the adversary's own stream).

Outcome distributions are finite atom mixtures so strict feasibility is
exactly checkable and expectations stay exact in tests. The bias chaser is
a heuristic stressor, not a worst-case adversary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cbr import DecisionRuleConfig, cbr, predicted_infeasible
from .domain import AgentSpec, DomainError, Transcript
from .events import DECISION, INFEASIBILITY

IID = "iid"
PIECEWISE = "piecewise"
DRIFTING = "drifting"
BIAS_CHASER = "bias_chaser"


@dataclass(frozen=True)
class FeatureSchedule:
    kind: str = "constant"  # constant | cyclic | random
    period: int = 1

    def draw(self, t: int, rng: np.random.Generator) -> int:
        if self.kind == "constant":
            return 0
        if self.kind == "cyclic":
            return (t - 1) % self.period
        if self.kind == "random":
            return int(rng.integers(self.period))
        raise DomainError(f"unknown feature schedule {self.kind!r}")


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    atoms: np.ndarray  # (m, d) rows in [0,1]^d
    probs: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if atoms.ndim != 2 or atoms.shape[0] != probs.shape[0]:
            raise DomainError("segment atoms/probs shape mismatch")
        if atoms.shape[0] == 0:
            raise DomainError("segment needs at least one atom")
        if np.any(atoms < 0.0) or np.any(atoms > 1.0):
            raise DomainError("segment atoms outside [0,1]")
        if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < 0.0):
            raise DomainError("segment probabilities must form a distribution")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class TrackedEvent:
    """Event the bias chaser steers against, evaluated from history only."""

    agent: AgentSpec
    kind: str  # DECISION or INFEASIBILITY
    action: int
    constraint: int | None = None
    rule: DecisionRuleConfig = field(default_factory=DecisionRuleConfig)

    def fired(self, p: np.ndarray) -> bool:
        if self.kind == DECISION:
            return cbr(self.agent, p, self.rule).action == self.action
        if self.kind == INFEASIBILITY:
            return predicted_infeasible(
                self.agent, self.constraint, self.action, p, self.rule.tolerance
            )
        raise DomainError(f"unknown tracked event kind {self.kind!r}")


@dataclass(frozen=True)
class AdversarySpec:
    kind: str
    horizon: int
    segments: tuple[Segment, ...]
    features: FeatureSchedule = field(default_factory=FeatureSchedule)
    probs_end: np.ndarray | None = None  # drifting only
    tracked: TrackedEvent | None = None  # bias chaser only

    def __post_init__(self):
        if self.kind not in (IID, PIECEWISE, DRIFTING, BIAS_CHASER):
            raise DomainError(f"unknown adversary kind {self.kind!r}")
        if not self.segments:
            raise DomainError("adversary needs at least one segment")
        expect = 1
        for seg in self.segments:
            if seg.start != expect:
                raise DomainError(
                    f"segments must partition [1,{self.horizon}]; "
                    f"segment starts at {seg.start}, expected {expect}"
                )
            expect = seg.end + 1
        if expect != self.horizon + 1:
            raise DomainError(
                f"segments end at {expect - 1}, horizon is {self.horizon}"
            )
        if self.kind == DRIFTING and self.probs_end is None:
            raise DomainError("drifting adversary needs probs_end")
        if self.kind == BIAS_CHASER and self.tracked is None:
            raise DomainError("bias chaser needs a tracked event")

    def segment_at(self, t: int) -> Segment:
        for seg in self.segments:
            if seg.start <= t <= seg.end:
                return seg
        raise DomainError(f"round {t} outside the adversary's horizon")


def iid_spec(horizon: int, atoms, probs, features: FeatureSchedule | None = None) -> AdversarySpec:
    return AdversarySpec(
        IID,
        horizon,
        (Segment(1, horizon, np.asarray(atoms, float), np.asarray(probs, float)),),
        features or FeatureSchedule(),
    )


def _round_probs(spec: AdversarySpec, t: int, seg: Segment) -> np.ndarray:
    if spec.kind != DRIFTING:
        return seg.probs
    w = (t - 1) / (spec.horizon - 1) if spec.horizon > 1 else 0.0
    return (1.0 - w) * seg.probs + w * spec.probs_end


def _chaser_bias(spec: AdversarySpec, history: Transcript) -> np.ndarray:
    bias = np.zeros(spec.segments[0].atoms.shape[1])
    for rec in history.rounds:
        if spec.tracked.fired(rec.prediction):
            bias += rec.prediction - rec.outcome
    return bias


def commit_round(
    spec: AdversarySpec, t: int, history: Transcript, rng: np.random.Generator
) -> tuple[int, Callable[[], np.ndarray]]:
    """Commit the round-t feature and a sealed outcome sampler.

    history holds rounds 1..t-1 only; the caller drives the protocol so the
    current prediction cannot reach this function. The outcome is drawn
    here, so nothing that happens later in the round can perturb it.
    """
    if not 1 <= t <= spec.horizon:
        raise DomainError(f"round {t} outside adversary horizon {spec.horizon}")
    x = spec.features.draw(t, rng)
    seg = spec.segment_at(t)
    if spec.kind == BIAS_CHASER:
        # steer the outcome against the tracked event's running signed bias:
        # among the committed atoms, the one minimizing <bias, y> pushes the
        # event-conditional bias further in its current direction
        bias = _chaser_bias(spec, history)
        scores = seg.atoms @ bias
        pick = int(np.argmin(scores))
        atoms = seg.atoms[pick : pick + 1]
        probs = np.array([1.0])
    else:
        atoms = seg.atoms
        probs = _round_probs(spec, t, seg)
    u = rng.random()
    idx = min(int(np.searchsorted(np.cumsum(probs), u, side="right")), len(probs) - 1)
    outcome = atoms[idx].copy()

    def sampler() -> np.ndarray:
        return outcome.copy()

    return x, sampler


@dataclass(frozen=True)
class FeasibilityEntry:
    agent_id: str
    segment_index: int
    feasible: bool
    witness_action: int | None


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    entries: tuple[FeasibilityEntry, ...]


def strict_feasibility_check(
    spec: AdversarySpec, agents: Sequence[AgentSpec], margin: float
) -> FeasibilityReport:
    """Certify per (agent, segment) that some action is margin-feasible on
    every support atom, so the corresponding dynamic benchmarks are
    nonempty."""
    entries: list[FeasibilityEntry] = []
    for ag in agents:
        for si, seg in enumerate(spec.segments):
            witness = None
            for a in range(ag.action_count):
                if ag.constraint_count:
                    vals = np.einsum("jd,md->jm", ag.constraint_weights[:, a, :], seg.atoms)
                    okay = bool(np.all(vals <= -margin))
                else:
                    okay = True  # no constraints: vacuously feasible
                if okay:
                    witness = a
                    break
            entries.append(
                FeasibilityEntry(ag.agent_id, si, witness is not None, witness)
            )
    return FeasibilityReport(all(e.feasible for e in entries), tuple(entries))
