"""Run configuration, the end-to-end protocol loop, and table emission.

A run executes, per round: (1) the adversary commits the feature and a
sealed outcome sampler, (2) the forecaster produces a prediction
distribution and samples the broadcast prediction, (3) every agent plays
its constrained best response to the sampled prediction, (4) the outcome
is revealed and the forecaster's weights update. Two independent seeded
streams (adversary, prediction sampling) keep either side ablatable.

Configuration is a single JSON document with a versioned schema and strict
unknown-field rejection; all emitted file formats are documented field by
field in docs/FORMATS.md.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import oracles
from .adversary import (
    BIAS_CHASER,
    DRIFTING,
    IID,
    PIECEWISE,
    AdversarySpec,
    FeatureSchedule,
    Segment,
    TrackedEvent,
    commit_round,
)
from .cbr import DecisionRuleConfig, cbr_batch
from .domain import (
    AgentSpec,
    DomainError,
    MarginPolicy,
    RoundRecord,
    SubsequenceSpec,
    Transcript,
    _fmt_real,
    augment_constant_coordinate,
    full_horizon,
    validate_agent_spec,
)
from .events import DECISION, EventRegistry, all_intervals, build_registry, dyadic_intervals
from .forecaster import Forecaster, GridSpec, default_spacing
from .metrics import (
    BiasAudit,
    EnvelopeParams,
    benchmark_set,
    calibration_bias,
    ccv,
    dynamic_benchmark_dp,
    envelopes,
    external_regret,
    swap_regret,
)
from .domain import lipschitz_constants


class ConfigError(DomainError):
    pass


# ---------------------------------------------------------------------------
# Config schema
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "schema_version",
    "dimension",
    "horizon",
    "augment",
    "n_features",
    "grid_spacing",
    "grid_cap",
    "learning_rate",
    "tolerance",
    "margin_policy",
    "agents",
    "subsequences",
    "adversary",
    "seeds",
    "registry_cap",
    "dp_cap",
    "dp_budget",
    "delta",
}


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)} in {where}")


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    dimension: int  # base outcome dimension, before augmentation
    horizon: int
    augment: bool
    n_features: int
    spacing: float
    grid_cap: int
    learning_rate: float | None
    tolerance: float
    margin_policy: MarginPolicy
    agents: tuple[AgentSpec, ...]
    subsequence_kind: str
    subsequences: tuple[SubsequenceSpec, ...]
    adversary: AdversarySpec
    seed_adversary: int
    seed_sampling: int
    registry_cap: int
    dp_cap: int
    dp_budget: int
    delta: float

    @property
    def effective_dimension(self) -> int:
        return self.dimension + (1 if self.augment else 0)

    @property
    def rule(self) -> DecisionRuleConfig:
        return DecisionRuleConfig(self.tolerance)

    def grid(self) -> GridSpec:
        return GridSpec(
            d_free=self.dimension,
            spacing=self.spacing,
            pinned_last=self.augment,
            cap=self.grid_cap,
        )


def _build_agent(entry: dict, effective_dim: int) -> AgentSpec:
    _check_keys(entry, {"agent_id", "utility", "constraints"}, f"agent {entry.get('agent_id')}")
    w = np.asarray(entry["utility"], dtype=float)
    cons = entry.get("constraints", [])
    if cons:
        v = np.asarray(cons, dtype=float)
    else:
        v = np.zeros((0, w.shape[0], w.shape[1] if w.ndim == 2 else 0))
    spec = AgentSpec(str(entry["agent_id"]), w, v)
    if spec.dimension != effective_dim:
        raise ConfigError(
            f"agent {spec.agent_id}: weights have {spec.dimension} coordinates, "
            f"run needs {effective_dim}"
        )
    report = validate_agent_spec(spec)
    if not report.ok:
        raise ConfigError(f"agent {spec.agent_id} invalid: {'; '.join(report.violations)}")
    return spec


def _build_subsequences(entry: dict, horizon: int, n_features: int):
    _check_keys(entry, {"kind", "specs"}, "subsequences")
    kind = entry.get("kind", "full")
    if kind == "full":
        return kind, (full_horizon(horizon),)
    if kind == "dyadic":
        return kind, tuple(dyadic_intervals(horizon))
    if kind == "all_intervals":
        return kind, tuple(all_intervals(horizon))
    if kind == "full_plus_features":
        specs = [full_horizon(horizon)]
        for f in range(n_features):
            specs.append(SubsequenceSpec(f"feat:{f}", "feature", feature=f))
        return kind, tuple(specs)
    if kind == "list":
        specs = []
        for s in entry.get("specs", []):
            _check_keys(
                s,
                {"kind", "start", "end", "feature", "period", "residue", "rounds", "name"},
                "subsequence spec",
            )
            sk = s["kind"]
            if sk == "interval":
                end = min(int(s["end"]), horizon)
                specs.append(
                    SubsequenceSpec(
                        s.get("name", f"interval:{s['start']}-{end}"),
                        "interval",
                        start=int(s["start"]),
                        end=end,
                    )
                )
            elif sk == "feature":
                specs.append(
                    SubsequenceSpec(
                        s.get("name", f"feat:{s['feature']}"), "feature", feature=int(s["feature"])
                    )
                )
            elif sk == "modulo":
                specs.append(
                    SubsequenceSpec(
                        s.get("name", f"mod:{s['period']}.{s['residue']}"),
                        "modulo",
                        period=int(s["period"]),
                        residue=int(s["residue"]),
                    )
                )
            elif sk == "explicit":
                specs.append(
                    SubsequenceSpec(
                        s.get("name", "explicit"),
                        "explicit",
                        rounds=frozenset(int(t) for t in s["rounds"]),
                    )
                )
            else:
                raise ConfigError(f"unknown subsequence kind {sk!r}")
        if not specs:
            raise ConfigError("subsequence list is empty")
        return kind, tuple(specs)
    raise ConfigError(f"unknown subsequence family {kind!r}")


def _resolve_atoms(atoms, dimension: int, augment: bool) -> np.ndarray:
    arr = np.asarray(atoms, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != dimension:
        raise ConfigError(f"adversary atoms must be (m, {dimension}), got {arr.shape}")
    return augment_constant_coordinate(arr) if augment else arr


def _build_adversary(
    entry: dict,
    horizon: int,
    dimension: int,
    augment: bool,
    agents: tuple[AgentSpec, ...],
    tolerance: float,
    n_features: int,
) -> AdversarySpec:
    _check_keys(
        entry,
        {"kind", "atoms", "probs", "segments", "probs_end", "tracked", "features"},
        "adversary",
    )
    feat_entry = entry.get("features", {"kind": "constant"})
    _check_keys(feat_entry, {"kind", "period"}, "adversary.features")
    features = FeatureSchedule(feat_entry.get("kind", "constant"), int(feat_entry.get("period", 1)))
    if features.kind != "constant" and features.period > n_features:
        raise ConfigError(
            f"feature schedule period {features.period} exceeds the alphabet size {n_features}"
        )
    kind = entry["kind"]
    if kind == PIECEWISE:
        segs = []
        start = 1
        raw_segs = entry["segments"]
        fractions = [s.get("fraction") for s in raw_segs]
        for i, s in enumerate(raw_segs):
            _check_keys(s, {"atoms", "probs", "fraction", "end"}, "adversary segment")
            if fractions[i] is not None:
                cum = sum(fractions[: i + 1])
                end = horizon if i == len(raw_segs) - 1 else int(round(cum * horizon))
            else:
                end = min(int(s["end"]), horizon) if i < len(raw_segs) - 1 else horizon
            end = max(end, start)
            segs.append(
                Segment(
                    start,
                    end,
                    _resolve_atoms(s["atoms"], dimension, augment),
                    np.asarray(s["probs"], dtype=float),
                )
            )
            start = end + 1
        if segs[-1].end != horizon:
            raise ConfigError("piecewise segments do not cover the horizon")
        return AdversarySpec(PIECEWISE, horizon, tuple(segs), features)
    atoms = _resolve_atoms(entry["atoms"], dimension, augment)
    probs = np.asarray(entry["probs"], dtype=float)
    seg = Segment(1, horizon, atoms, probs)
    if kind == IID:
        return AdversarySpec(IID, horizon, (seg,), features)
    if kind == DRIFTING:
        probs_end = np.asarray(entry["probs_end"], dtype=float)
        return AdversarySpec(DRIFTING, horizon, (seg,), features, probs_end=probs_end)
    if kind == BIAS_CHASER:
        tr = entry["tracked"]
        _check_keys(tr, {"agent_id", "event", "action", "constraint"}, "adversary.tracked")
        agent = next((a for a in agents if a.agent_id == tr["agent_id"]), None)
        if agent is None:
            raise ConfigError(f"tracked agent {tr['agent_id']!r} not in agent list")
        tracked = TrackedEvent(
            agent,
            tr["event"],
            int(tr["action"]),
            tr.get("constraint"),
            DecisionRuleConfig(tolerance),
        )
        return AdversarySpec(BIAS_CHASER, horizon, (seg,), features, tracked=tracked)
    raise ConfigError(f"unknown adversary kind {kind!r}")


def resolve_config(
    raw: dict, horizon: int | None = None, seed_offset: int = 0
) -> RunConfig:
    """Validate and resolve a raw config document.

    horizon and seed_offset let sweeps re-derive runs from one document;
    fraction-based adversary segments rescale with the horizon.
    """
    _check_keys(raw, _TOP_KEYS, "config")
    if raw.get("schema_version") != 1:
        raise ConfigError(f"unsupported config schema_version {raw.get('schema_version')!r}")
    dimension = int(raw["dimension"])
    t_max = int(horizon if horizon is not None else raw["horizon"])
    if dimension < 1 or t_max < 0:
        raise ConfigError("dimension must be >= 1 and horizon >= 0")
    augment = bool(raw.get("augment", False))
    n_features = int(raw.get("n_features", 1))
    eff_dim = dimension + (1 if augment else 0)
    spacing = raw.get("grid_spacing")
    spacing = float(spacing) if spacing is not None else default_spacing(t_max)
    tolerance = float(raw.get("tolerance", 0.0))
    mp_entry = raw.get("margin_policy", {"kind": "power"})
    _check_keys(mp_entry, {"kind", "value", "exponent"}, "margin_policy")
    margin_policy = MarginPolicy(
        kind=mp_entry.get("kind", "power"),
        value=float(mp_entry.get("value", 0.0)),
        exponent=float(mp_entry.get("exponent", -0.25)),
    )
    agents = tuple(_build_agent(a, eff_dim) for a in raw["agents"])
    if len({a.agent_id for a in agents}) != len(agents):
        raise ConfigError("duplicate agent ids")
    sub_kind, subseqs = _build_subsequences(
        raw.get("subsequences", {"kind": "full"}), t_max, n_features
    )
    seeds = raw.get("seeds", {})
    _check_keys(seeds, {"adversary", "sampling"}, "seeds")
    adversary = _build_adversary(
        raw["adversary"], max(t_max, 1), dimension, augment, agents, tolerance, n_features
    )
    lr = raw.get("learning_rate")
    cfg = RunConfig(
        raw=raw,
        dimension=dimension,
        horizon=t_max,
        augment=augment,
        n_features=n_features,
        spacing=spacing,
        grid_cap=int(raw.get("grid_cap", 20_000)),
        learning_rate=float(lr) if lr is not None else None,
        tolerance=tolerance,
        margin_policy=margin_policy,
        agents=agents,
        subsequence_kind=sub_kind,
        subsequences=subseqs,
        adversary=adversary,
        seed_adversary=int(seeds.get("adversary", 0)) + seed_offset,
        seed_sampling=int(seeds.get("sampling", 1)) + seed_offset,
        registry_cap=int(raw.get("registry_cap", 50_000)),
        dp_cap=int(raw.get("dp_cap", 600)),
        dp_budget=int(raw.get("dp_budget", 4)),
        delta=float(raw.get("delta", 0.05)),
    )
    cfg.grid()  # validate spacing and cap now, not at round 1
    return cfg


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    config: RunConfig
    transcript: Transcript
    registry: EventRegistry
    forecaster: Forecaster
    diagnostics: list[dict] = field(default_factory=list)

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.transcript.write(out / "transcript.jsonl")
        self.registry.write_dump(out / "registry.jsonl")
        with open(out / "diagnostics.jsonl", "w") as fh:
            fh.write('{"kind":"header","schema":"diagnostics.v1"}\n')
            for rec in self.diagnostics:
                fh.write(
                    f'{{"t":{rec["t"]},"game_value":{_fmt_real(rec["game_value"])}'
                    f',"active_events":{rec["active_events"]}'
                    f',"lp_iterations":{rec["lp_iterations"]}'
                    f',"psi_support":{rec["psi_support"]}}}\n'
                )


def run_experiment(config: RunConfig) -> RunResult:
    """Execute the four-step protocol for every round.

    The registry cap is enforced before round 1. Any module error aborts
    with the failing round index attached.
    """
    registry = build_registry(
        config.agents, config.subsequences, config.rule, cap=config.registry_cap
    )
    forecaster = Forecaster(
        registry,
        config.grid(),
        config.horizon,
        learning_rate=config.learning_rate,
        sampling_seed=config.seed_sampling,
    )
    transcript = Transcript(
        dimension=config.dimension,
        horizon=config.horizon,
        spacing=config.spacing,
        augment=config.augment,
        n_features=config.n_features,
        agent_ids=tuple(a.agent_id for a in config.agents),
        seed_adversary=config.seed_adversary,
        seed_sampling=config.seed_sampling,
    )
    adv_rng = np.random.default_rng(config.seed_adversary)
    for t in range(1, config.horizon + 1):
        try:
            x, sampler = commit_round(config.adversary, t, transcript, adv_rng)
            dist, p = forecaster.begin_round(t, x)
            actions = []
            for ag in config.agents:
                act, _ = cbr_batch(ag, p[None, :], config.rule)
                actions.append(int(act[0]))
            y = sampler()
            forecaster.record_outcome(y)
            transcript.append(
                RoundRecord(
                    t=t,
                    feature=x,
                    psi_support=len(dist.probs),
                    psi_digest=dist.digest(),
                    prediction=p,
                    actions=tuple(actions),
                    outcome=y,
                )
            )
        except Exception as exc:
            raise type(exc)(f"round {t}: {exc}") from exc
    return RunResult(config, transcript, registry, forecaster, forecaster.diagnostics)


# ---------------------------------------------------------------------------
# Metrics table
# ---------------------------------------------------------------------------

METRICS_SCHEMA = "metrics.v1"
_METRIC_ORDER = (
    "ccv",
    "external_regret",
    "swap_regret",
    "benchmark_size",
    "margin",
    "decision_bias_max",
    "infeasibility_bias_max",
)


@dataclass
class MetricsTable:
    rows: list[dict]

    def to_lines(self) -> list[str]:
        lines = [f"# schema={METRICS_SCHEMA}", "agent,subseq,metric,value,envelope,undefined"]
        for r in self.rows:
            value = "" if r["value"] is None else _fmt_real(r["value"])
            env = "" if r["envelope"] is None else _fmt_real(r["envelope"])
            lines.append(
                f'{r["agent"]},{r["subseq"]},{r["metric"]},{value},{env},{int(r["undefined"])}'
            )
        return lines

    def write(self, path) -> None:
        with open(path, "w") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    def lookup(self, agent: str, subseq: str, metric: str):
        for r in self.rows:
            if r["agent"] == agent and r["subseq"] == subseq and r["metric"] == metric:
                return r
        raise KeyError((agent, subseq, metric))


def _subseq_rows_for_metrics(config: RunConfig) -> list[SubsequenceSpec]:
    specs = list(config.subsequences)
    ids = {s.subseq_id for s in specs}
    t_max = config.horizon
    if t_max >= 1:
        for k in sorted({max(t_max // 4, 1), max(t_max // 2, 1), t_max}):
            sid = f"prefix:{k}"
            if sid not in ids:
                specs.append(SubsequenceSpec(sid, "interval", start=1, end=k))
    return specs


def _agent_subseq_rows(
    transcript: Transcript,
    config: RunConfig,
    agent: AgentSpec,
    spec: SubsequenceSpec,
    audit: BiasAudit,
    registry: EventRegistry,
    params: EnvelopeParams,
) -> list[dict]:
    feats = transcript.features
    length = sum(
        1 for t in range(1, len(transcript.rounds) + 1) if spec.contains(t, feats[t - 1])
    )
    margin = 0.0 if config.tolerance > 0.0 else config.margin_policy.margin_for(length)
    c = ccv(transcript, agent, spec)
    ext = external_regret(transcript, agent, spec, margin)
    swp = swap_regret(transcript, agent, spec, margin)
    bench = benchmark_set(transcript, agent, spec, margin)
    idx = registry.by_agent_subseq.get((agent.agent_id, spec.subseq_id))
    dec_bias = inf_bias = None
    if idx is not None:
        kinds = np.array([registry.keys[i].kind == DECISION for i in idx])
        dec_idx = idx[kinds]
        inf_idx = idx[~kinds]
        dec_bias = audit.max_linf(dec_idx)
        inf_bias = audit.max_linf(inf_idx) if inf_idx.size else 0.0
    env = None
    if length > 0:
        env = envelopes(
            params,
            length,
            float(length),
            margin=margin if config.tolerance == 0.0 else None,
            tolerance=config.tolerance if config.tolerance > 0.0 else None,
        )
    out = []

    def add(metric, value, envelope=None, undefined=False):
        out.append(
            {
                "agent": agent.agent_id,
                "subseq": spec.subseq_id,
                "metric": metric,
                "value": value,
                "envelope": envelope,
                "undefined": undefined,
            }
        )

    add("ccv", c.max_violation, env.ccv_envelope if env else None)
    for j in range(agent.constraint_count):
        add(f"ccv_{j}", float(c.per_constraint[j]))
    add("external_regret", ext, env.swap_envelope if env else None, undefined=ext is None)
    add("swap_regret", swp, env.swap_envelope if env else None, undefined=swp is None)
    add("benchmark_size", float(len(bench.actions)))
    add("margin", margin)
    add("decision_bias_max", dec_bias, undefined=dec_bias is None)
    add("infeasibility_bias_max", inf_bias, undefined=inf_bias is None)
    return out


def compute_metrics(
    transcript: Transcript, config: RunConfig, workers: int = 1
) -> MetricsTable:
    """Full metrics table over tracked subsequences plus prefix checkpoints
    at T/4, T/2 and T. Fan-out over (agent, subsequence) pairs is safe: the
    transcript is read-only and rows are assembled in input order."""
    registry = build_registry(
        config.agents, config.subsequences, config.rule, cap=config.registry_cap
    )
    audit = calibration_bias(transcript, registry)
    l_u, l_c = lipschitz_constants(config.agents)
    params = EnvelopeParams(
        lipschitz_u=l_u,
        lipschitz_c=l_c,
        dimension=config.effective_dimension,
        n_constraints=max((a.constraint_count for a in config.agents), default=0),
        n_actions=max((a.action_count for a in config.agents), default=1),
        n_agents=len(config.agents),
        n_subseqs=len(config.subsequences),
        horizon=config.horizon,
        delta=config.delta,
    )
    specs = _subseq_rows_for_metrics(config)
    jobs = [(agent, spec) for agent in config.agents for spec in specs]

    def work(job):
        agent, spec = job
        return _agent_subseq_rows(transcript, config, agent, spec, audit, registry, params)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(work, jobs))
    else:
        groups = [work(j) for j in jobs]
    rows = [row for group in groups for row in group]
    return MetricsTable(rows)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

SWEEP_SCHEMA = "sweep.v1"
SWEEP_METRICS = ("max_event_bias", "ccv", "swap_regret", "dynamic_regret")


@dataclass
class SweepTable:
    rows: list[dict]

    def to_lines(self) -> list[str]:
        lines = [
            f"# schema={SWEEP_SCHEMA}",
            "horizon,metric,median,max,median_over_sqrt_t,median_over_t23,undefined",
        ]
        for r in self.rows:
            med = "" if r["median"] is None else _fmt_real(r["median"])
            mx = "" if r["max"] is None else _fmt_real(r["max"])
            rs = "" if r["ratio_sqrt"] is None else _fmt_real(r["ratio_sqrt"])
            rt = "" if r["ratio_t23"] is None else _fmt_real(r["ratio_t23"])
            lines.append(
                f'{r["horizon"]},{r["metric"]},{med},{mx},{rs},{rt},{int(r["undefined"])}'
            )
        return lines

    def write(self, path) -> None:
        with open(path, "w") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    def value(self, horizon: int, metric: str, column: str = "median"):
        for r in self.rows:
            if r["horizon"] == horizon and r["metric"] == metric:
                return r[column]
        raise KeyError((horizon, metric))


def run_and_summarize(config: RunConfig) -> dict:
    """One run reduced to the sweep metrics (max over agents)."""
    result = run_experiment(config)
    registry = result.registry
    audit = calibration_bias(result.transcript, registry)
    full = full_horizon(config.horizon)
    lam = 0.0 if config.tolerance > 0.0 else config.margin_policy.margin_for(config.horizon)
    ccv_vals, swap_vals, dyn_vals = [], [], []
    for agent in config.agents:
        ccv_vals.append(ccv(result.transcript, agent, full).max_violation)
        swap_vals.append(swap_regret(result.transcript, agent, full, lam))
        if config.horizon <= config.dp_cap:
            dyn = dynamic_benchmark_dp(
                result.transcript, agent, config.dp_budget, config.margin_policy, cap=config.dp_cap
            )
            dyn_vals.append(dyn.regret if dyn is not None else None)
        else:
            dyn_vals.append(None)
    summary = {
        "max_event_bias": audit.max_linf(),
        "ccv": max(ccv_vals) if ccv_vals else 0.0,
        "swap_regret": _max_or_none(swap_vals),
        "dynamic_regret": _max_or_none(dyn_vals),
        "result": result,
    }
    return summary


def _max_or_none(values):
    defined = [v for v in values if v is not None]
    if len(defined) != len(values) or not defined:
        return None
    return max(defined)


def sweep(raw_config: dict, horizons: list[int], seed_count: int) -> SweepTable:
    """Per-horizon medians and maxima over seeds, with rate-reference ratios."""
    if sorted(horizons) != list(horizons):
        raise ConfigError("horizons must be ascending")
    rows = []
    for t_max in horizons:
        per_metric: dict[str, list] = {m: [] for m in SWEEP_METRICS}
        for i in range(seed_count):
            cfg = resolve_config(raw_config, horizon=t_max, seed_offset=i)
            summary = run_and_summarize(cfg)
            for m in SWEEP_METRICS:
                per_metric[m].append(summary[m])
        for m in SWEEP_METRICS:
            vals = per_metric[m]
            defined = [v for v in vals if v is not None]
            if defined and len(defined) == len(vals):
                med = float(np.median(defined))
                mx = float(max(defined))
                rows.append(
                    {
                        "horizon": t_max,
                        "metric": m,
                        "median": med,
                        "max": mx,
                        "ratio_sqrt": med / math.sqrt(t_max) if t_max else None,
                        "ratio_t23": med / t_max ** (2.0 / 3.0) if t_max else None,
                        "undefined": False,
                    }
                )
            else:
                rows.append(
                    {
                        "horizon": t_max,
                        "metric": m,
                        "median": None,
                        "max": None,
                        "ratio_sqrt": None,
                        "ratio_t23": None,
                        "undefined": True,
                    }
                )
    return SweepTable(rows)


# ---------------------------------------------------------------------------
# Oracle battery
# ---------------------------------------------------------------------------

def _random_agent(rng: np.random.Generator, dim: int, actions: int, constraints: int) -> AgentSpec:
    w = rng.random((actions, dim))
    w = w / np.maximum(w.sum(axis=1, keepdims=True), 1.0)  # keep some rows interior
    v = rng.uniform(-1.0, 1.0, (constraints, actions, dim))
    norms = np.abs(v).sum(axis=2, keepdims=True)
    v = v / np.maximum(norms, 1.0)
    return AgentSpec(f"rand{rng.integers(1 << 30)}", w, v)


def _random_transcript(
    rng: np.random.Generator, agent: AgentSpec, t_max: int
) -> Transcript:
    tr = Transcript(
        dimension=agent.dimension,
        horizon=t_max,
        spacing=0.125,
        augment=False,
        n_features=1,
        agent_ids=(agent.agent_id,),
        seed_adversary=0,
        seed_sampling=0,
    )
    for t in range(1, t_max + 1):
        y = rng.random(agent.dimension)
        p = rng.random(agent.dimension)
        a = int(rng.integers(agent.action_count))
        tr.append(
            RoundRecord(
                t=t,
                feature=0,
                psi_support=1,
                psi_digest="oracle",
                prediction=p,
                actions=(a,),
                outcome=y,
            )
        )
    return tr


def oracle_check(seed: int = 0, n_cbr: int = 1000, n_swap: int = 500, n_dp: int = 100) -> dict:
    """Exact-agreement battery between primaries and brute-force oracles."""
    rng = np.random.default_rng(seed)
    mismatches = {"cbr": 0, "swap": 0, "dynamic": 0}
    for _ in range(n_cbr):
        agent = _random_agent(rng, int(rng.integers(1, 5)), int(rng.integers(1, 9)), int(rng.integers(0, 4)))
        p = rng.random(agent.dimension)
        tol = float(rng.choice([0.0, 0.1]))
        got, _ = cbr_batch(agent, p[None, :], DecisionRuleConfig(tol))
        want, _ = oracles.brute_cbr(agent, p, tol)
        if int(got[0]) != want:
            mismatches["cbr"] += 1
    for _ in range(n_swap):
        agent = _random_agent(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(0, 3)))
        tr = _random_transcript(rng, agent, int(rng.integers(1, 13)))
        spec = full_horizon(tr.horizon)
        lam = float(rng.choice([0.0, 0.05, 0.2]))
        got = swap_regret(tr, agent, spec, lam)
        want = oracles.brute_swap(tr, agent, spec, lam)
        if (got is None) != (want is None) or (got is not None and got != want):
            mismatches["swap"] += 1
    policy = MarginPolicy(kind="power", exponent=-0.25)
    for _ in range(n_dp):
        agent = _random_agent(rng, int(rng.integers(1, 3)), int(rng.integers(1, 4)), int(rng.integers(0, 3)))
        tr = _random_transcript(rng, agent, int(rng.integers(1, 11)))
        budget = int(rng.integers(0, 5))
        got = dynamic_benchmark_dp(tr, agent, budget, policy)
        want = oracles.brute_dynamic(tr, agent, budget, policy)
        if (got is None) != (want is None):
            mismatches["dynamic"] += 1
        elif got is not None and got.value != want[0]:
            mismatches["dynamic"] += 1
    return mismatches
