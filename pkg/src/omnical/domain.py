"""Core value types for outcomes, predictions, agents, subsequences and transcripts.

The outcome space is the hypercube [0,1]^d. Agents carry linear utilities
u(a, y) = <w_a, y> and linear constraints c_j(a, y) = <v_{j,a}, y>; weight
norms are bounded so that u stays in [0,1] and c in [-1,1] on the hypercube
without any runtime clamping. Affine offsets are expressed through an
augmentation coordinate pinned to 1 in every outcome and prediction.

All values are immutable after construction and safe to share across
parallel metric workers.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Absolute tolerance used for the strict predicted-infeasibility comparison
# c(a, p) > tol. Absorbs float noise only; never applied to realized values.
FEASIBILITY_ATOL = 1e-9


def _as_readonly(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


def _fmt_real(x: float) -> str:
    """Serialize a real with 17 significant digits (lossless round trip)."""
    return format(float(x), ".17g")


def _fmt_vec(v: np.ndarray) -> str:
    return "[" + ",".join(_fmt_real(x) for x in v) + "]"


class DomainError(ValueError):
    """Raised for malformed domain values (bad shapes, ranges, indices)."""


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------

def check_outcome(y: np.ndarray, d: int) -> np.ndarray:
    """Validate an outcome vector: length d, every coordinate in [0,1]."""
    y = np.asarray(y, dtype=float)
    if y.shape != (d,):
        raise DomainError(f"outcome has shape {y.shape}, expected ({d},)")
    if np.any(y < 0.0) or np.any(y > 1.0):
        raise DomainError(f"outcome coordinates outside [0,1]: {y}")
    return y


def is_grid_aligned(p: np.ndarray, spacing: float, pinned_last: bool = False) -> bool:
    """True iff every free coordinate of p is an integer multiple of spacing."""
    p = np.asarray(p, dtype=float)
    free = p[:-1] if pinned_last else p
    mult = free / spacing
    if pinned_last and p[-1] != 1.0:
        return False
    return bool(np.all(np.abs(mult - np.round(mult)) < 1e-9))


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AgentSpec:
    """A downstream decision maker: linear utility and constraint weights.

    utility_weights has shape (A, d); row a is w_a with w_a >= 0 and
    ||w_a||_1 <= 1. constraint_weights has shape (J, A, d); entry (j, a)
    is v_{j,a} with ||v_{j,a}||_1 <= 1. J may be 0.
    """

    agent_id: str
    utility_weights: np.ndarray
    constraint_weights: np.ndarray

    def __post_init__(self):
        w = _as_readonly(self.utility_weights)
        v = _as_readonly(self.constraint_weights)
        if w.ndim != 2:
            raise DomainError("utility_weights must be a (A, d) matrix")
        a, d = w.shape
        if a < 1:
            raise DomainError("agent needs at least one action")
        if v.size == 0:
            v = _as_readonly(np.zeros((0, a, d)))
        if v.ndim != 3 or v.shape[1] != a or v.shape[2] != d:
            raise DomainError(
                f"constraint_weights shape {v.shape} incompatible with (J, {a}, {d})"
            )
        object.__setattr__(self, "utility_weights", w)
        object.__setattr__(self, "constraint_weights", v)

    @property
    def action_count(self) -> int:
        return self.utility_weights.shape[0]

    @property
    def constraint_count(self) -> int:
        return self.constraint_weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.utility_weights.shape[1]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_agent_spec(spec: AgentSpec) -> ValidationReport:
    """Check the weight-norm invariants; report every violated row."""
    bad: list[str] = []
    w = spec.utility_weights
    for a in range(spec.action_count):
        row = w[a]
        if np.any(row < 0.0):
            bad.append(f"utility row {a}: negative weight")
        row_sum = float(np.abs(row).sum())
        if row_sum > 1.0 + 1e-12:
            bad.append(f"utility row {a}: l1 norm {row_sum:.6g} > 1")
    for j in range(spec.constraint_count):
        for a in range(spec.action_count):
            norm = float(np.abs(spec.constraint_weights[j, a]).sum())
            if norm > 1.0 + 1e-12:
                bad.append(f"constraint ({j},{a}): l1 norm {norm:.6g} > 1")
    return ValidationReport(ok=not bad, violations=tuple(bad))


def evaluate_utility(spec: AgentSpec, action: int, y: np.ndarray) -> float:
    """u(a, y) = <w_a, y>. Raises on an out-of-range action index."""
    if not 0 <= action < spec.action_count:
        raise DomainError(f"action {action} out of range [0, {spec.action_count})")
    return float(spec.utility_weights[action] @ np.asarray(y, dtype=float))


def evaluate_constraint(spec: AgentSpec, j: int, action: int, y: np.ndarray) -> float:
    """c_j(a, y) = <v_{j,a}, y>."""
    if not 0 <= j < spec.constraint_count:
        raise DomainError(f"constraint {j} out of range [0, {spec.constraint_count})")
    if not 0 <= action < spec.action_count:
        raise DomainError(f"action {action} out of range [0, {spec.action_count})")
    return float(spec.constraint_weights[j, action] @ np.asarray(y, dtype=float))


def lipschitz_constants(agents: Sequence[AgentSpec]) -> tuple[float, float]:
    """Exact l_inf Lipschitz constants of the linear maps.

    L_U = max over agents and actions of ||w_a||_1, L_C likewise over
    constraint rows. L_C is 0 when no agent has constraints.
    """
    if not agents:
        raise DomainError("lipschitz_constants of an empty agent set")
    l_u = max(float(np.abs(ag.utility_weights).sum(axis=1).max()) for ag in agents)
    l_c = 0.0
    for ag in agents:
        if ag.constraint_count:
            l_c = max(l_c, float(np.abs(ag.constraint_weights).sum(axis=2).max()))
    return l_u, l_c


def augment_constant_coordinate(vectors: np.ndarray) -> np.ndarray:
    """Append a coordinate pinned to exactly 1.0 to each row.

    Outcomes and grid points get the pinned coordinate so that agent weights
    on it act as constant offsets; the prediction-outcome bias on it is
    identically zero since both sides carry the same 1.
    """
    arr = np.atleast_2d(np.asarray(vectors, dtype=float))
    ones = np.ones((arr.shape[0], 1))
    out = np.hstack([arr, ones])
    return out if np.asarray(vectors).ndim > 1 else out[0]


# ---------------------------------------------------------------------------
# Subsequences and margins
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsequenceSpec:
    """A subsequence indicator: membership is a pure function of (t, x_t).

    kind is one of "interval" (params start, end inclusive, 1-based),
    "feature" (params feature id), "modulo" (params period, residue of t),
    "explicit" (params frozenset of rounds).
    """

    subseq_id: str
    kind: str
    start: int = 0
    end: int = 0
    feature: int = -1
    period: int = 0
    residue: int = 0
    rounds: frozenset = field(default_factory=frozenset)

    def contains(self, t: int, x: int) -> bool:
        if self.kind == "interval":
            return self.start <= t <= self.end
        if self.kind == "feature":
            return x == self.feature
        if self.kind == "modulo":
            return t % self.period == self.residue
        if self.kind == "explicit":
            return t in self.rounds
        raise DomainError(f"unknown subsequence kind {self.kind!r}")

    def resolve(self, t_max: int, features: Sequence[int]) -> np.ndarray:
        """Sorted member rounds within [1, t_max] given the feature sequence."""
        return np.array(
            [t for t in range(1, t_max + 1) if self.contains(t, features[t - 1])],
            dtype=int,
        )


def interval_subseq(start: int, end: int) -> SubsequenceSpec:
    return SubsequenceSpec(f"interval:{start}-{end}", "interval", start=start, end=end)


def full_horizon(t_max: int) -> SubsequenceSpec:
    return SubsequenceSpec("full", "interval", start=1, end=t_max)


@dataclass(frozen=True)
class MarginPolicy:
    """Margin lambda as a function of a subsequence length.

    kind "fixed" returns value; kind "power" returns n**exponent
    (default exponent -1/4). Length 0 maps to margin 0.
    """

    kind: str = "power"
    value: float = 0.0
    exponent: float = -0.25

    def margin_for(self, n: int) -> float:
        if self.kind == "fixed":
            lam = self.value
        elif self.kind == "power":
            lam = float(n) ** self.exponent if n > 0 else 0.0
        else:
            raise DomainError(f"unknown margin policy kind {self.kind!r}")
        if lam < 0.0:
            raise DomainError(f"margin policy produced negative margin {lam}")
        return lam


# ---------------------------------------------------------------------------
# Transcript
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundRecord:
    t: int
    feature: int
    psi_support: int
    psi_digest: str
    prediction: np.ndarray
    actions: tuple[int, ...]
    outcome: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prediction", _as_readonly(self.prediction))
        object.__setattr__(self, "outcome", _as_readonly(self.outcome))
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))


@dataclass
class Transcript:
    """Append-only record of a run, rounds indexed 1..T contiguously."""

    dimension: int
    horizon: int
    spacing: float
    augment: bool
    n_features: int
    agent_ids: tuple[str, ...]
    seed_adversary: int
    seed_sampling: int
    rounds: list[RoundRecord] = field(default_factory=list)

    def append(self, record: RoundRecord) -> None:
        expected = len(self.rounds) + 1
        if record.t != expected:
            raise DomainError(f"round {record.t} appended, expected {expected}")
        if record.t > self.horizon:
            raise DomainError(f"round {record.t} beyond horizon {self.horizon}")
        self.rounds.append(record)

    @property
    def features(self) -> list[int]:
        return [r.feature for r in self.rounds]

    def outcomes(self) -> np.ndarray:
        return np.array([r.outcome for r in self.rounds], dtype=float)

    def predictions(self) -> np.ndarray:
        return np.array([r.prediction for r in self.rounds], dtype=float)

    def actions_of(self, agent_id: str) -> np.ndarray:
        k = self.agent_ids.index(agent_id)
        return np.array([r.actions[k] for r in self.rounds], dtype=int)

    # -- line-delimited serialization (schema transcript.v1) ----------------
    # Field order is fixed; all reals carry 17 significant digits. Formats
    # are documented field by field in docs/FORMATS.md.

    def header_line(self) -> str:
        return (
            '{"kind":"header","schema":"transcript.v1"'
            f',"d":{self.dimension}'
            f',"d_effective":{self.dimension + (1 if self.augment else 0)}'
            f',"T":{self.horizon}'
            f',"h":{_fmt_real(self.spacing)}'
            f',"augment":{"true" if self.augment else "false"}'
            f',"n_features":{self.n_features}'
            f',"agents":{json.dumps(list(self.agent_ids))}'
            f',"seed_adversary":{self.seed_adversary}'
            f',"seed_sampling":{self.seed_sampling}'
            "}"
        )

    def round_line(self, r: RoundRecord) -> str:
        return (
            '{"kind":"round"'
            f',"t":{r.t}'
            f',"x":{r.feature}'
            f',"psi_support":{r.psi_support}'
            f',"psi_digest":"{r.psi_digest}"'
            f',"p":{_fmt_vec(r.prediction)}'
            f',"actions":[{",".join(str(a) for a in r.actions)}]'
            f',"y":{_fmt_vec(r.outcome)}'
            "}"
        )

    def to_lines(self) -> list[str]:
        return [self.header_line()] + [self.round_line(r) for r in self.rounds]

    def write(self, path) -> None:
        with open(path, "w") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Transcript":
        it = iter(lines)
        head = json.loads(next(it))
        if head.get("schema") != "transcript.v1":
            raise DomainError(f"unsupported transcript schema {head.get('schema')!r}")
        tr = cls(
            dimension=head["d"],
            horizon=head["T"],
            spacing=head["h"],
            augment=head["augment"],
            n_features=head["n_features"],
            agent_ids=tuple(head["agents"]),
            seed_adversary=head["seed_adversary"],
            seed_sampling=head["seed_sampling"],
        )
        for line in it:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            tr.append(
                RoundRecord(
                    t=rec["t"],
                    feature=rec["x"],
                    psi_support=rec["psi_support"],
                    psi_digest=rec["psi_digest"],
                    prediction=np.array(rec["p"], dtype=float),
                    actions=tuple(rec["actions"]),
                    outcome=np.array(rec["y"], dtype=float),
                )
            )
        return tr

    @classmethod
    def read(cls, path) -> "Transcript":
        with open(path) as fh:
            return cls.from_lines(fh)


def distribution_digest(points: np.ndarray, probs: np.ndarray) -> str:
    """Stable 16-hex digest of a finite-support distribution."""
    parts = []
    for pt, pr in zip(points, probs):
        parts.append(",".join(_fmt_real(c) for c in pt) + ":" + _fmt_real(pr))
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]
