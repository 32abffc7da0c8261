"""Calibrated vector forecasting for constrained downstream decision makers.

One forecaster broadcasts predictions over [0,1]^d; stateless agents play
constrained best responses as if the predictions were correct; audits
verify that every agent's cumulative constraint violation and swap regret
stay sublinear on every tracked subsequence.
"""

from .adversary import AdversarySpec, FeatureSchedule, Segment, commit_round, strict_feasibility_check
from .cbr import DecisionRuleConfig, cbr, cbr_batch, predicted_infeasible
from .domain import (
    AgentSpec,
    MarginPolicy,
    SubsequenceSpec,
    Transcript,
    augment_constant_coordinate,
    evaluate_constraint,
    evaluate_utility,
    lipschitz_constants,
    validate_agent_spec,
)
from .events import EventKey, EventRegistry, all_intervals, build_registry, dyadic_intervals, evaluate_active_events
from .forecaster import (
    Forecaster,
    GridSpec,
    PredictionDistribution,
    WeightState,
    compute_expert_distribution,
    sample_prediction,
    solve_round_minmax,
)
from .harness import RunConfig, compute_metrics, resolve_config, run_experiment, sweep
from .kernels import BACKEND
from .metrics import (
    EnvelopeParams,
    adaptive_regret,
    benchmark_set,
    calibration_bias,
    ccv,
    dynamic_benchmark_dp,
    envelopes,
    external_regret,
    swap_regret,
)

__version__ = "0.1.0"
