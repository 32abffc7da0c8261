import math

import numpy as np
import pytest

from omnical.cbr import DecisionRuleConfig
from omnical.domain import DomainError, full_horizon
from omnical.events import build_registry
from omnical.forecaster import (
    Forecaster,
    GameValueError,
    GridCapExceeded,
    GridSpec,
    PredictionDistribution,
    ProtocolOrderError,
    WeightState,
    compute_expert_distribution,
    default_learning_rate,
    default_spacing,
    point_mass,
    record_outcome_increments,
    sample_prediction,
)
from omnical.harness import resolve_config, run_experiment
from omnical.metrics import calibration_bias

from conftest import dyadic_raw, golden_raw, raw_with, standard_raw, worked_agent

RULE = DecisionRuleConfig(0.0)


class TestGridSpec:
    def test_points_origin_first(self):
        grid = GridSpec(d_free=2, spacing=0.5)
        pts = grid.points()
        assert pts.shape == (9, 2)
        assert np.array_equal(pts[0], [0.0, 0.0])
        assert np.array_equal(pts[-1], [1.0, 1.0])

    def test_pinned_last_coordinate(self):
        grid = GridSpec(d_free=1, spacing=0.25, pinned_last=True)
        pts = grid.points()
        assert pts.shape == (5, 2)
        assert np.all(pts[:, 1] == 1.0)

    def test_spacing_must_be_dyadic(self):
        with pytest.raises(DomainError):
            GridSpec(d_free=1, spacing=0.3)
        with pytest.raises(DomainError):
            GridSpec(d_free=1, spacing=1.0)

    def test_cap(self):
        with pytest.raises(GridCapExceeded):
            GridSpec(d_free=3, spacing=1 / 32, cap=20_000)

    def test_default_spacing_clamped(self):
        assert default_spacing(10) == 0.125
        assert default_spacing(250) == 1 / 16
        assert default_spacing(1000) == 1 / 32
        assert default_spacing(10**9) == 1 / 64


class TestExpertDistribution:
    def test_uniform_at_start(self):
        w = WeightState.zeros(3, 2, learning_rate=1.0)
        q = compute_expert_distribution(w)
        assert q.shape == (3, 2, 2)
        assert np.allclose(q, 1.0 / 12.0)

    def test_single_event_one_round(self):
        # one past round with expected payoff 0.5 at rate 1:
        # q+ = 1 / (1 + e^{-0.5})
        w = WeightState.zeros(1, 1, learning_rate=1.0)
        w.payoffs[0, 0, 0] = 0.5
        w.payoffs[0, 0, 1] = -0.5
        q = compute_expert_distribution(w)
        expected = 1.0 / (1.0 + math.exp(-0.5))
        assert q[0, 0, 0] == pytest.approx(expected, abs=1e-10)
        assert q[0, 0, 1] == pytest.approx(1.0 - expected, abs=1e-10)

    def test_shift_invariance(self):
        w = WeightState.zeros(2, 1, learning_rate=0.7)
        w.payoffs[:] = 3.25
        q = compute_expert_distribution(w)
        assert np.allclose(q, 0.25)


class TestRecordOutcome:
    def test_point_mass_degenerate_expectation(self):
        w = WeightState.zeros(1, 1, learning_rate=1.0)
        dist = PredictionDistribution(
            points=np.array([[0.5]]), probs=np.array([1.0]), grid_indices=np.array([0])
        )
        record_outcome_increments(
            w, dist, np.array([[1.0]]), np.array([0]), np.array([0.25])
        )
        assert w.payoffs[0, 0, 0] == pytest.approx(0.25)
        assert w.payoffs[0, 0, 1] == pytest.approx(-0.25)

    def test_event_firing_nowhere_contributes_zero(self):
        w = WeightState.zeros(1, 1, learning_rate=1.0)
        dist = PredictionDistribution(
            points=np.array([[0.5]]), probs=np.array([1.0]), grid_indices=np.array([0])
        )
        record_outcome_increments(
            w, dist, np.array([[0.0]]), np.array([0]), np.array([0.25])
        )
        assert np.all(w.payoffs == 0.0)

    def test_two_point_support_expectation(self):
        w = WeightState.zeros(1, 1, learning_rate=1.0)
        dist = PredictionDistribution(
            points=np.array([[0.0], [0.5]]),
            probs=np.array([0.5, 0.5]),
            grid_indices=np.array([0, 1]),
        )
        # event fires only at 0.5, outcome 0: increment 0.5 * 1 * (0.5 - 0)
        record_outcome_increments(
            w, dist, np.array([[0.0, 1.0]]), np.array([0]), np.array([0.0])
        )
        assert w.payoffs[0, 0, 0] == pytest.approx(0.25)
        assert w.payoffs[0, 0, 1] == pytest.approx(-0.25)

    def test_inactive_events_untouched(self):
        w = WeightState.zeros(2, 1, learning_rate=1.0)
        dist = point_mass(np.array([[0.5]]))
        record_outcome_increments(
            w, dist, np.array([[1.0]]), np.array([1]), np.array([0.0])
        )
        assert np.all(w.payoffs[0] == 0.0)
        assert w.payoffs[1, 0, 0] == pytest.approx(0.5)


class TestSampling:
    def test_point_mass_always_returns_it(self):
        dist = point_mass(np.array([[0.25], [0.5]]), index=1)
        rng = np.random.default_rng(0)
        for _ in range(20):
            p, idx = sample_prediction(dist, rng)
            assert p[0] == 0.5 and idx == 1

    def test_golden_draw_sequence(self):
        dist = PredictionDistribution(
            points=np.array([[0.0], [0.5], [1.0]]),
            probs=np.array([0.25, 0.5, 0.25]),
            grid_indices=np.array([0, 1, 2]),
        )
        rng = np.random.default_rng(424242)
        draws = [float(sample_prediction(dist, rng)[0][0]) for _ in range(12)]
        assert draws == [0.5, 0.0, 0.5, 0.0, 0.5, 0.5, 0.0, 1.0, 0.0, 1.0, 0.5, 1.0]

    def test_empirical_frequency(self):
        dist = PredictionDistribution(
            points=np.array([[0.0], [0.5]]),
            probs=np.array([0.5, 0.5]),
            grid_indices=np.array([0, 1]),
        )
        rng = np.random.default_rng(7)
        n0 = sum(1 for _ in range(10_000) if sample_prediction(dist, rng)[0][0] == 0.0)
        assert abs(n0 / 10_000 - 0.5) <= 0.02  # 3 sigma ~ 0.015


class TestRoundDriver:
    def _forecaster(self, horizon=5):
        reg = build_registry([worked_agent()], [full_horizon(horizon)], RULE)
        grid = GridSpec(d_free=2, spacing=0.25)
        return Forecaster(reg, grid, horizon, sampling_seed=1)

    def test_rounds_must_be_ordered(self):
        fc = self._forecaster()
        fc.begin_round(1, 0)
        with pytest.raises(ProtocolOrderError):
            fc.begin_round(2, 0)  # outcome 1 not recorded yet

    def test_outcome_without_round_rejected(self):
        fc = self._forecaster()
        with pytest.raises(ProtocolOrderError):
            fc.record_outcome(np.array([0.5, 0.5]))

    def test_round_indices_checked(self):
        fc = self._forecaster()
        with pytest.raises(ProtocolOrderError):
            fc.begin_round(2, 0)

    def test_t1_no_events_returns_first_grid_point(self):
        # no agents: empty registry, prediction pinned at the origin
        reg = build_registry([], [full_horizon(3)], RULE)
        grid = GridSpec(d_free=1, spacing=0.5)
        fc = Forecaster(reg, grid, 3, sampling_seed=0)
        dist, p = fc.begin_round(1, 0)
        assert p[0] == 0.0 and len(dist.probs) == 1
        fc.record_outcome(np.array([1.0]))

    def test_horizon_one_run(self):
        raw = raw_with(golden_raw(), horizon=1)
        cfg = resolve_config(raw)
        res = run_experiment(cfg)
        assert len(res.transcript.rounds) == 1

    def test_learning_rate_default(self):
        lr = default_learning_rate(8, 1, 100)
        assert lr == pytest.approx(math.sqrt(8 * math.log(16) / 100))


class TestRunInvariants:
    def test_game_value_bound_every_round(self, standard_run_250):
        cfg, res = standard_run_250
        bound = cfg.spacing / 2 + 1e-6
        assert all(d["game_value"] <= bound for d in res.diagnostics)

    def test_directional_bias_bound_small_run(self):
        raw = raw_with(dyadic_raw(), horizon=200)
        cfg = resolve_config(raw)
        res = run_experiment(cfg)
        n_events = len(res.registry)
        bound = cfg.horizon * cfg.spacing / 2 + 2 * math.sqrt(
            cfg.horizon * math.log(2 * 1 * n_events)
        )
        worst = float(np.abs(res.forecaster.weights.payoffs[:, :, 0]).max())
        assert worst <= 1.5 * bound

    def test_realized_vs_expected_gap(self):
        # across 20 seeded runs the realized bias stays Azuma-close to the
        # expected bias tracked by the weight state
        raw = raw_with(dyadic_raw(), horizon=100)
        delta = 0.01
        bound = 3.0 * math.sqrt(100 * math.log(1.0 / delta))
        for seed in range(20):
            cfg = resolve_config(raw, seed_offset=seed)
            res = run_experiment(cfg)
            audit = calibration_bias(res.transcript, res.registry)
            expected = res.forecaster.weights.payoffs[:, :, 0]
            gap = float(np.abs(audit.vectors - expected).max())
            assert gap <= bound

    def test_point_mass_runs_have_zero_gap(self):
        # one action, no constraints, d=1: every psi is a point mass, so the
        # realized and expected biases agree exactly
        raw = {
            "schema_version": 1,
            "dimension": 1,
            "horizon": 60,
            "augment": False,
            "n_features": 1,
            "agents": [{"agent_id": "solo", "utility": [[1.0]], "constraints": []}],
            "subsequences": {"kind": "full"},
            "adversary": {"kind": "iid", "atoms": [[0.3], [0.8]], "probs": [0.4, 0.6]},
            "seeds": {"adversary": 5, "sampling": 6},
        }
        cfg = resolve_config(raw)
        res = run_experiment(cfg)
        assert all(d["psi_support"] == 1 for d in res.diagnostics)
        audit = calibration_bias(res.transcript, res.registry)
        expected = res.forecaster.weights.payoffs[:, :, 0]
        assert float(np.abs(audit.vectors - expected).max()) <= 1e-9

    def test_value_bound_violation_aborts(self, monkeypatch):
        import omnical.forecaster as fmod

        fc = Forecaster(
            build_registry([worked_agent()], [full_horizon(2)], RULE),
            GridSpec(d_free=2, spacing=0.25),
            2,
            sampling_seed=0,
        )

        def bad_solver(q, fire, active, grid, pts):
            return point_mass(pts), 0.9, 1  # value far above h/2

        monkeypatch.setattr(fmod, "solve_round_minmax", bad_solver)
        with pytest.raises(GameValueError):
            fc.begin_round(1, 0)
