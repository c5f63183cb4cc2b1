//! Discrete-event fault-injection simulation of a candidate solution running
//! a fixed workload on a modeled machine.
//!
//! Time is kept in integer nanoseconds so that, in every trial, the makespan
//! equals useful work plus the overhead categories exactly. Each trial draws
//! from its own ChaCha8 streams keyed by `(seed, trial)`, so reports do not
//! depend on how trials are spread across threads.

mod analytic;
mod engine;
mod sweep;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{builtin_catalog, Catalog, PatternClass};
use crate::costmodel::{self, CostError};
use crate::synthesis::SolutionCandidate;
use crate::system::SystemModel;

pub use analytic::{analytic_checkpoint_model, AnalyticEstimate};
pub use sweep::{sweep, sweep_in, SweepAxis, SweepGrid, SweepRow, SweepTable};

/// Patterns the simulator has behavioral handlers for.
pub const SUPPORTED_PATTERNS: [&str; 10] = [
    "forward-error-correction-code",
    "monitoring",
    "n-modular-redundancy",
    "prediction",
    "recovery-block",
    "reinitialization",
    "rejuvenation",
    "restructure",
    "rollback",
    "rollforward",
];

pub const DEFAULT_EVENT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    /// Seconds of useful computation.
    pub total_work: f64,
    /// Fraction of the machine's time that advances the computation.
    #[serde(default = "one")]
    pub parallel_efficiency: f64,
}

fn one() -> f64 {
    1.0
}

impl Workload {
    pub fn new(total_work: f64) -> Self {
        Self {
            total_work,
            parallel_efficiency: 1.0,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !self.total_work.is_finite() || self.total_work <= 0.0 {
            return Err("total_work must be finite and positive".into());
        }
        if !(self.parallel_efficiency > 0.0 && self.parallel_efficiency <= 1.0) {
            return Err("parallel_efficiency must lie in (0, 1]".into());
        }
        Ok(())
    }
}

fn default_budget() -> u64 {
    DEFAULT_EVENT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub system: SystemModel,
    pub workload: Workload,
    pub solution: SolutionCandidate,
    pub seed: u64,
    pub trials: u64,
    /// Record the event trace of trial 0.
    #[serde(default)]
    pub trace: bool,
    /// Keep per-trial summaries in the report.
    #[serde(default)]
    pub per_trial: bool,
    /// Loop steps after which a trial is abandoned as livelocked.
    #[serde(default = "default_budget")]
    pub event_budget: u64,
}

impl SimConfig {
    pub fn new(system: SystemModel, workload: Workload, solution: SolutionCandidate) -> Self {
        Self {
            system,
            workload,
            solution,
            seed: 0,
            trials: 1,
            trace: false,
            per_trial: false,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverheadCategory {
    Checkpointing,
    Recovery,
    Replication,
    Monitoring,
    Rejuvenation,
    LostWork,
}

impl OverheadCategory {
    pub const ALL: [OverheadCategory; 6] = [
        OverheadCategory::Checkpointing,
        OverheadCategory::Recovery,
        OverheadCategory::Replication,
        OverheadCategory::Monitoring,
        OverheadCategory::Rejuvenation,
        OverheadCategory::LostWork,
    ];

    pub fn key(self) -> &'static str {
        match self {
            OverheadCategory::Checkpointing => "checkpointing",
            OverheadCategory::Recovery => "recovery",
            OverheadCategory::Replication => "replication",
            OverheadCategory::Monitoring => "monitoring",
            OverheadCategory::Rejuvenation => "rejuvenation",
            OverheadCategory::LostWork => "lost_work",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Seconds per overhead category.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadBreakdown {
    pub checkpointing: f64,
    pub recovery: f64,
    pub replication: f64,
    pub monitoring: f64,
    pub rejuvenation: f64,
    pub lost_work: f64,
}

impl OverheadBreakdown {
    pub fn get(&self, cat: OverheadCategory) -> f64 {
        self.values()[cat.index()]
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.checkpointing,
            self.recovery,
            self.replication,
            self.monitoring,
            self.rejuvenation,
            self.lost_work,
        ]
    }

    fn from_values(v: [f64; 6]) -> Self {
        Self {
            checkpointing: v[0],
            recovery: v[1],
            replication: v[2],
            monitoring: v[3],
            rejuvenation: v[4],
            lost_work: v[5],
        }
    }

    pub fn total(&self) -> f64 {
        self.values().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventCounts {
    pub injected_faults: u64,
    pub activated_errors: u64,
    pub detected: u64,
    pub masked: u64,
    pub recovered: u64,
    pub unrecovered_failures: u64,
    /// Faults forestalled by prediction.
    pub avoided: u64,
    pub false_alarms: u64,
    pub votes: u64,
    pub lost_votes: u64,
    pub livelock_aborts: u64,
}

impl EventCounts {
    fn add(&mut self, o: &EventCounts) {
        self.injected_faults += o.injected_faults;
        self.activated_errors += o.activated_errors;
        self.detected += o.detected;
        self.masked += o.masked;
        self.recovered += o.recovered;
        self.unrecovered_failures += o.unrecovered_failures;
        self.avoided += o.avoided;
        self.false_alarms += o.false_alarms;
        self.votes += o.votes;
        self.lost_votes += o.lost_votes;
        self.livelock_aborts += o.livelock_aborts;
    }
}

/// Exact per-trial accounting in nanoseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSummary {
    pub trial: u64,
    pub makespan_ns: u64,
    pub useful_ns: u64,
    /// Indexed like [`OverheadCategory::ALL`].
    pub overhead_ns: [u64; 6],
    pub events: EventCounts,
}

impl TrialSummary {
    pub fn overhead_total_ns(&self) -> u64 {
        self.overhead_ns.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Fault,
    Error,
    Failure,
    Checkpoint,
    Detect,
    Recover,
    Vote,
    Rejuvenate,
    Complete,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventTrace {
    pub events: Vec<TraceEvent>,
}

impl EventTrace {
    /// One compact JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimReport {
    pub trials: u64,
    pub total_work: f64,
    pub makespan_mean: f64,
    pub makespan_p50: f64,
    pub makespan_p95: f64,
    /// Standard error of the makespan mean.
    pub makespan_stderr: f64,
    /// Mean of `total_work / makespan` over trials.
    pub efficiency_mean: f64,
    /// Replicated resources of the solution relative to the base machine.
    pub space_overhead: f64,
    /// Totals over all trials.
    pub events: EventCounts,
    /// Mean seconds per trial.
    pub overhead_breakdown: OverheadBreakdown,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<TrialSummary>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<EventTrace>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("pattern `{0}` has no simulator handler")]
    UnsupportedPattern(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
    #[error("sweep parameter `{0}` matches several instances; qualify it as `pattern.parameter`")]
    AmbiguousParameter(String),
    #[error("value {value} is outside the domain of `{parameter}`")]
    OutOfDomain { parameter: String, value: f64 },
    #[error("csv export failed: {0}")]
    Csv(String),
}

/// Runs `cfg.trials` replications against the builtin catalog.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport, SimError> {
    run_simulation_in(cfg, &builtin_catalog(), None)
}

/// Runs a simulation with parameter specs from `catalog`, on a dedicated
/// pool of `threads` workers when given (the result does not depend on it).
pub fn run_simulation_in(
    cfg: &SimConfig,
    catalog: &Catalog,
    threads: Option<usize>,
) -> Result<SimReport, SimError> {
    check_config(cfg, catalog)?;
    let behavior = engine::Behavior::resolve(cfg, catalog)?;
    let run = || -> Vec<(TrialSummary, Option<EventTrace>)> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| engine::run_trial(cfg, &behavior, trial, cfg.trace && trial == 0))
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SimError::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let space = costmodel::aggregate_cost(&cfg.solution.instances, catalog, &cfg.system)?
        .space_overhead;
    Ok(summarize(cfg, space, results))
}

fn check_config(cfg: &SimConfig, catalog: &Catalog) -> Result<(), SimError> {
    let invalid = |m: String| Err(SimError::InvalidConfig(m));
    if cfg.trials == 0 {
        return invalid("trials must be at least 1".into());
    }
    if cfg.event_budget == 0 {
        return invalid("event_budget must be positive".into());
    }
    cfg.system.check().map_err(SimError::InvalidConfig)?;
    cfg.workload.check().map_err(SimError::InvalidConfig)?;
    match catalog.get(&cfg.solution.state_binding) {
        Some(p) if p.class == PatternClass::State => {}
        _ => {
            return invalid(format!(
                "state binding `{}` is not a state pattern",
                cfg.solution.state_binding
            ))
        }
    }
    let mut seen = BTreeMap::new();
    for inst in &cfg.solution.instances {
        if !SUPPORTED_PATTERNS.contains(&inst.pattern.as_str()) {
            return Err(SimError::UnsupportedPattern(inst.pattern.clone()));
        }
        if seen.insert(inst.pattern.as_str(), ()).is_some() {
            return invalid(format!("pattern `{}` is instantiated twice", inst.pattern));
        }
        if let Some((name, v)) = inst.bindings.iter().find(|(_, v)| !v.is_finite()) {
            return invalid(format!("non-finite value {v} for `{}.{name}`", inst.pattern));
        }
        costmodel::resolve_bindings(inst, catalog)?;
    }
    Ok(())
}

fn ns_to_s(ns: u64) -> f64 {
    ns as f64 / 1e9
}

fn percentile(sorted: &[u64], q: f64) -> u64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn summarize(
    cfg: &SimConfig,
    space_overhead: f64,
    results: Vec<(TrialSummary, Option<EventTrace>)>,
) -> SimReport {
    let n = results.len() as f64;
    let mut events = EventCounts::default();
    let mut overhead = [0u128; 6];
    let mut makespans: Vec<u64> = Vec::with_capacity(results.len());
    let mut efficiency = 0.0;
    let mut trace = None;
    let mut per_trial = Vec::new();
    for (summary, t) in results {
        events.add(&summary.events);
        for (acc, v) in overhead.iter_mut().zip(summary.overhead_ns) {
            *acc += u128::from(v);
        }
        makespans.push(summary.makespan_ns);
        efficiency += cfg.workload.total_work / ns_to_s(summary.makespan_ns);
        if t.is_some() {
            trace = t;
        }
        if cfg.per_trial {
            per_trial.push(summary);
        }
    }
    let total: u128 = makespans.iter().map(|&m| u128::from(m)).sum();
    let mean = total as f64 / n / 1e9;
    let var = if makespans.len() > 1 {
        makespans
            .iter()
            .map(|&m| (ns_to_s(m) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = makespans.clone();
    sorted.sort_unstable();
    SimReport {
        trials: cfg.trials,
        total_work: cfg.workload.total_work,
        makespan_mean: mean,
        makespan_p50: ns_to_s(percentile(&sorted, 0.5)),
        makespan_p95: ns_to_s(percentile(&sorted, 0.95)),
        makespan_stderr: (var / n).sqrt(),
        efficiency_mean: efficiency / n,
        space_overhead,
        events,
        overhead_breakdown: OverheadBreakdown::from_values(overhead.map(|v| v as f64 / n / 1e9)),
        per_trial: cfg.per_trial.then_some(per_trial),
        trace,
    }
}
