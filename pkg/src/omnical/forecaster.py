"""Online forecaster producing conditionally unbiased grid predictions.

Per round the forecaster
  1. forms an exponential-weights distribution q over (event, coordinate,
     sign) triples from cumulative expected payoffs,
  2. solves the induced prediction game over a finite grid: minimize over
     distributions psi the worst case over outcomes y in the hypercube of
     sum_{E,i,s} q^{E,i,s} * s * E[ E(x,p) * (p_i - y_i) ],
  3. samples the broadcast prediction p from psi,
  4. after the outcome arrives, adds the exact expected payoff over psi's
     finite support (never the realized sample) to each active triple.

The inner maximum is linear in y, so the game value for fixed psi is
sum_i C_i(psi) + sum_i max(0, -D_i(psi)) over the free coordinates, which
the simplex kernel minimizes as a linear program. A point mass at the grid
point nearest the adversary's mean caps the value at h/2, so every round's
game value must satisfy value <= h/2 + 1e-6; the run loop treats any
violation as a hard failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cbr import DecisionRuleConfig, cbr_batch, infeasibility_matrix
from .domain import DomainError, distribution_digest
from .events import DECISION, EventRegistry
from .kernels import solve_game_lp

GAME_VALUE_SLACK = 1e-6


class ProtocolOrderError(RuntimeError):
    """Rounds driven out of order (outcome missing or duplicated)."""


class GameValueError(RuntimeError):
    """Per-round game value exceeded h/2 + slack: solver or assembly bug."""


class GridCapExceeded(DomainError):
    pass


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform prediction grid {0, h, ..., 1}^d_free, h = 2^-k.

    With pinned_last set, every point carries a trailing coordinate equal
    to exactly 1.0 (the affine-offset coordinate); it is excluded from the
    inner maximization since outcomes share the pinned value.
    """

    d_free: int
    spacing: float
    pinned_last: bool = False
    cap: int = 20_000

    def __post_init__(self):
        k = round(-math.log2(self.spacing))
        if k < 1 or abs(self.spacing - 2.0 ** (-k)) > 1e-12:
            raise DomainError(f"grid spacing {self.spacing} is not 2^-k with k >= 1")
        if self.n_points > self.cap:
            raise GridCapExceeded(
                f"grid would hold {self.n_points} points, cap is {self.cap}"
            )

    @property
    def points_per_dim(self) -> int:
        return int(round(1.0 / self.spacing)) + 1

    @property
    def n_points(self) -> int:
        return self.points_per_dim**self.d_free

    @property
    def dimension(self) -> int:
        return self.d_free + (1 if self.pinned_last else 0)

    def points(self) -> np.ndarray:
        """All grid points, lexicographic with the first coordinate slowest;
        point 0 is the origin."""
        ppd = self.points_per_dim
        n = self.n_points
        pts = np.zeros((n, self.dimension))
        idx = np.arange(n)
        for i in range(self.d_free - 1, -1, -1):
            pts[:, i] = (idx % ppd) * self.spacing
            idx //= ppd
        if self.pinned_last:
            pts[:, -1] = 1.0
        return pts

    def free_indices(self) -> np.ndarray:
        return np.arange(self.d_free)


def default_spacing(horizon: int) -> float:
    """h = 2^-ceil(log2 sqrt(T)), clamped to [1/64, 1/8]."""
    if horizon < 2:
        return 0.125
    k = math.ceil(math.log2(math.sqrt(horizon)))
    return min(max(2.0 ** (-k), 1.0 / 64.0), 0.125)


def default_learning_rate(n_events: int, dimension: int, horizon: int) -> float:
    """sqrt(8 ln(2 d |E|) / T), the fixed rate for a known horizon."""
    if n_events < 1 or horizon < 1:
        return 1.0
    return math.sqrt(8.0 * math.log(2.0 * dimension * n_events) / horizon)


# ---------------------------------------------------------------------------
# Prediction distributions and weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictionDistribution:
    """Finite-support distribution over grid points."""

    points: np.ndarray  # (k, d)
    probs: np.ndarray  # (k,)
    grid_indices: np.ndarray  # (k,) indices into the full grid

    def __post_init__(self):
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise DomainError("prediction distribution probabilities must sum to 1")
        if np.any(self.probs < 0.0):
            raise DomainError("negative probability in prediction distribution")

    def digest(self) -> str:
        return distribution_digest(self.points, self.probs)

    def mean(self) -> np.ndarray:
        return self.probs @ self.points


def point_mass(grid_points: np.ndarray, index: int = 0) -> PredictionDistribution:
    return PredictionDistribution(
        points=grid_points[index : index + 1].copy(),
        probs=np.array([1.0]),
        grid_indices=np.array([index], dtype=int),
    )


@dataclass
class WeightState:
    """Cumulative expected payoffs G per (event, coordinate, sign) triple.

    payoffs has shape (n_events, d, 2); sign slot 0 is +1, slot 1 is -1.
    Each per-round increment has magnitude at most 1.
    """

    learning_rate: float
    payoffs: np.ndarray
    expected_activations: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise DomainError("learning rate must be positive")
        if self.expected_activations is None:
            self.expected_activations = np.zeros(self.payoffs.shape[0])

    @classmethod
    def zeros(cls, n_events: int, dimension: int, learning_rate: float) -> "WeightState":
        return cls(learning_rate, np.zeros((n_events, dimension, 2)))

    def expected_bias(self) -> np.ndarray:
        """Signed cumulative expected bias per (event, coordinate)."""
        return self.payoffs[:, :, 0].copy()


def compute_expert_distribution(weights: WeightState) -> np.ndarray:
    """q proportional to exp(lr/2 * G), normalized over all 2 d |E| triples.

    Computed with max subtraction for overflow safety. Uniform when all
    payoffs are equal (in particular at the first round).
    """
    g = weights.payoffs
    if g.size == 0:
        return np.zeros_like(g)
    scaled = 0.5 * weights.learning_rate * g
    scaled = scaled - scaled.max()
    q = np.exp(scaled)
    return q / q.sum()


def solve_round_minmax(
    q: np.ndarray,
    fire: np.ndarray,
    active: np.ndarray,
    grid: GridSpec,
    grid_points: np.ndarray,
) -> tuple[PredictionDistribution, float, int]:
    """Minimize the prediction game for one round.

    q is the full (n_events, d, 2) expert distribution; fire is the boolean
    (n_active, N) matrix of event values at every grid point for the active
    events (rows aligned with `active`). Inactive events evaluate to zero
    everywhere, so they are simply omitted. Returns (psi, game value, LP
    iterations).
    """
    if active.size == 0 or q.size == 0:
        return point_mass(grid_points), 0.0, 0
    delta = q[active, :, 0] - q[active, :, 1]  # (n_active, d)
    dmat_all = delta.T @ fire  # (d, N)
    free = grid.free_indices()
    dmat = np.ascontiguousarray(dmat_all[free])
    cost = np.zeros(grid_points.shape[0])
    for i in free:
        cost = cost + dmat_all[i] * grid_points[:, i]
    psi, value, iters = solve_game_lp(cost, dmat)
    idx = np.nonzero(psi > 0.0)[0]
    if idx.size == 0:  # fully degenerate solution; treat as point mass
        idx = np.array([0])
        psi = np.zeros_like(psi)
        psi[0] = 1.0
    probs = psi[idx]
    probs = probs / probs.sum()
    dist = PredictionDistribution(
        points=grid_points[idx].copy(), probs=probs, grid_indices=idx
    )
    return dist, float(value), iters


def sample_prediction(dist: PredictionDistribution, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Draw one support point; deterministic given the generator state."""
    u = rng.random()
    cum = np.cumsum(dist.probs)
    k = int(np.searchsorted(cum, u, side="right"))
    k = min(k, len(dist.probs) - 1)
    return dist.points[k].copy(), int(dist.grid_indices[k])


def record_outcome_increments(
    weights: WeightState,
    dist: PredictionDistribution,
    fire_support: np.ndarray,
    active: np.ndarray,
    y: np.ndarray,
) -> None:
    """Accumulate exact expected payoffs over psi's finite support.

    For each active event E the per-coordinate increment is
    sum_p psi(p) E(x,p) (p_i - y_i); sign slot 1 receives the negation.
    Inactive events are untouched.
    """
    if active.size == 0:
        return
    wfire = fire_support * dist.probs[None, :]  # (n_active, k)
    incr = wfire @ (dist.points - y[None, :])  # (n_active, d)
    weights.payoffs[active, :, 0] += incr
    weights.payoffs[active, :, 1] -= incr
    weights.expected_activations[active] += wfire.sum(axis=1)


# ---------------------------------------------------------------------------
# Round driver
# ---------------------------------------------------------------------------

class Forecaster:
    """Stateful round driver: feature in, psi out, outcome in.

    Rounds must be driven strictly in order 1..T, recording each outcome
    before the next round begins. Event values over the grid are cached
    once per run: they depend on the prediction only through each agent's
    grid responses, which are fixed.
    """

    def __init__(
        self,
        registry: EventRegistry,
        grid: GridSpec,
        horizon: int,
        learning_rate: float | None = None,
        sampling_seed: int = 0,
    ):
        self.registry = registry
        self.grid = grid
        self.horizon = horizon
        self.grid_points = grid.points()
        n_events = len(registry)
        self.learning_rate = (
            learning_rate
            if learning_rate is not None
            else default_learning_rate(n_events, grid.dimension, horizon)
        )
        self.weights = WeightState.zeros(n_events, grid.dimension, self.learning_rate)
        self.rng = np.random.default_rng(sampling_seed)
        self._fire_rows, self._row_of_event = self._build_fire_cache()
        self._pending = None
        self._next_t = 1
        self.diagnostics: list[dict] = []

    def _build_fire_cache(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct event-value rows over the grid, shared across subsequences."""
        reg = self.registry
        rows: list[np.ndarray] = []
        key_to_row: dict[tuple, int] = {}
        row_of_event = np.zeros(len(reg), dtype=int)
        per_agent: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for ag in reg.agents:
            actions, _ = cbr_batch(ag, self.grid_points, reg.rule)
            infeas = infeasibility_matrix(ag, self.grid_points, reg.rule)
            per_agent[ag.agent_id] = (actions, infeas)
        for i, key in enumerate(reg.keys):
            actions, infeas = per_agent[key.agent_id]
            rk = (key.agent_id, key.kind, key.action, key.constraint)
            if rk not in key_to_row:
                if key.kind == DECISION:
                    vec = actions == key.action
                else:
                    vec = infeas[key.constraint, key.action]
                key_to_row[rk] = len(rows)
                rows.append(vec.astype(float))
            row_of_event[i] = key_to_row[rk]
        if rows:
            return np.array(rows), row_of_event
        return np.zeros((0, self.grid_points.shape[0])), row_of_event

    def begin_round(self, t: int, x: int) -> tuple[PredictionDistribution, np.ndarray]:
        if self._pending is not None:
            raise ProtocolOrderError(
                f"round {t} began before outcome of round {self._pending['t']} was recorded"
            )
        if t != self._next_t:
            raise ProtocolOrderError(f"round {t} driven out of order, expected {self._next_t}")
        if t > self.horizon:
            raise ProtocolOrderError(f"round {t} beyond horizon {self.horizon}")
        active = self.registry.active_indices(t, x)
        fire = self._fire_rows[self._row_of_event[active]] if active.size else np.zeros((0, 0))
        q = compute_expert_distribution(self.weights)
        dist, value, iters = solve_round_minmax(q, fire, active, self.grid, self.grid_points)
        if value > self.grid.spacing / 2.0 + GAME_VALUE_SLACK:
            raise GameValueError(
                f"round {t}: game value {value:.3e} exceeds h/2 + {GAME_VALUE_SLACK:g}"
            )
        p, p_idx = sample_prediction(dist, self.rng)
        if active.size:
            self.registry.fired_counts[active] += fire[:, p_idx].astype(int)
        self._pending = {
            "t": t,
            "active": active,
            "fire": fire,
            "dist": dist,
            "value": value,
            "iters": iters,
        }
        self.diagnostics.append(
            {
                "t": t,
                "game_value": value,
                "active_events": int(active.size),
                "lp_iterations": iters,
                "psi_support": int(len(dist.probs)),
            }
        )
        return dist, p

    def record_outcome(self, y: np.ndarray) -> None:
        if self._pending is None:
            raise ProtocolOrderError("record_outcome called with no round in flight")
        pend = self._pending
        dist: PredictionDistribution = pend["dist"]
        active = pend["active"]
        if active.size:
            fire_support = pend["fire"][:, dist.grid_indices]
            record_outcome_increments(self.weights, dist, fire_support, active, np.asarray(y, dtype=float))
        self._pending = None
        self._next_t = pend["t"] + 1
