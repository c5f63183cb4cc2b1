use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Weibull};

use super::{
    EventCounts, EventKind, EventTrace, OverheadCategory, SimConfig, SimError, TraceEvent,
    TrialSummary,
};
use crate::catalog::Catalog;
use crate::costmodel::resolve_bindings;
use crate::synthesis::STATELESS;
use crate::system::InterarrivalModel;

const CHECKPOINTING: usize = OverheadCategory::Checkpointing as usize;
const RECOVERY: usize = OverheadCategory::Recovery as usize;
const REPLICATION: usize = OverheadCategory::Replication as usize;
const MONITORING: usize = OverheadCategory::Monitoring as usize;
const REJUVENATION: usize = OverheadCategory::Rejuvenation as usize;
const LOST_WORK: usize = OverheadCategory::LostWork as usize;

// Independent streams per trial.
const STREAM_ARRIVALS: u64 = 0;
const STREAM_DECISIONS: u64 = 1;
const STREAM_FALSE_ALARMS: u64 = 2;
const STREAMS_PER_TRIAL: u64 = 3;

pub(crate) fn ns(seconds: f64) -> u64 {
    let v = (seconds * 1e9).round();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.max(0.0) as u64
    }
}

fn secs(ns: u64) -> f64 {
    ns as f64 / 1e9
}

struct Rollback {
    interval: u64,
    checkpoint: u64,
    restart: u64,
}

struct Prediction {
    accuracy: f64,
    action: u64,
    /// False alarms per second.
    alarm_rate: f64,
}

/// Handler parameters resolved once per simulation.
pub(crate) struct Behavior {
    scoped: bool,
    work: u64,
    rollback: Option<Rollback>,
    rollforward: Option<u64>,
    reinitialization: Option<u64>,
    rejuvenation: Option<(u64, u64)>,
    restructure: Option<(u64, f64)>,
    monitoring: Option<u64>,
    prediction: Option<Prediction>,
    nmr: Option<u64>,
    vote_interval: u64,
    fec_corrects: Option<bool>,
    recovery_block: Option<u64>,
    /// Fault-free time fraction per overhead category.
    fractions: [f64; 6],
}

impl Behavior {
    pub(crate) fn resolve(cfg: &SimConfig, catalog: &Catalog) -> Result<Self, SimError> {
        let sys = &cfg.system;
        let mtbe = sys.mean_time_between_events();
        let mut b = Behavior {
            scoped: cfg.solution.state_binding != STATELESS,
            work: ns(cfg.workload.total_work / cfg.workload.parallel_efficiency),
            rollback: None,
            rollforward: None,
            reinitialization: None,
            rejuvenation: None,
            restructure: None,
            monitoring: None,
            prediction: None,
            nmr: None,
            vote_interval: 0,
            fec_corrects: None,
            recovery_block: None,
            fractions: [0.0; 6],
        };
        for inst in &cfg.solution.instances {
            let v = resolve_bindings(inst, catalog)?;
            let base = catalog.get(&inst.pattern).expect("resolved").base_cost;
            let pe = |s: f64| ns(s + base.time_overhead_per_event);
            let ff = base.time_overhead_fault_free;
            match inst.pattern.as_str() {
                "rollback" => {
                    b.rollback = Some(Rollback {
                        interval: ns(v["interval"]),
                        checkpoint: ns(v["checkpoint_cost"]),
                        restart: pe(v["restart_cost"]),
                    });
                    b.fractions[CHECKPOINTING] += ff;
                }
                "rollforward" => {
                    b.rollforward = Some(pe(v["replay_cost"]));
                    b.fractions[CHECKPOINTING] += v["log_cost"] + ff;
                }
                "reinitialization" => {
                    b.reinitialization = Some(pe(v["cost"]));
                    b.fractions[RECOVERY] += ff;
                }
                "rejuvenation" => {
                    b.rejuvenation = Some((ns(v["period"]), pe(v["cost"])));
                    b.fractions[REJUVENATION] += ff;
                }
                "restructure" => {
                    b.restructure = Some((pe(v["cost"]), v["degraded_capacity"]));
                    b.fractions[RECOVERY] += ff;
                }
                "monitoring" => {
                    b.monitoring = Some(pe(v["detection_latency"]));
                    b.fractions[MONITORING] += v["overhead"] + ff;
                }
                "prediction" => {
                    b.prediction = Some(Prediction {
                        accuracy: v["accuracy"],
                        action: pe(v["action_cost"]),
                        alarm_rate: mtbe.map_or(0.0, |m| v["false_positive_rate"] / m),
                    });
                    b.fractions[MONITORING] += ff;
                }
                "n-modular-redundancy" => {
                    b.nmr = Some(v["N"] as u64);
                    b.fractions[REPLICATION] += ff;
                }
                "forward-error-correction-code" => {
                    // one event corrupts one symbol; r check symbols correct floor(r/2)
                    b.fec_corrects = Some((v["r"] as u64) / 2 >= 1);
                    b.fractions[REPLICATION] += v["codec_cost"] + ff;
                }
                "recovery-block" => {
                    b.recovery_block = Some(pe(0.0));
                    b.fractions[MONITORING] += v["acceptance_test_cost"] + ff;
                }
                other => return Err(SimError::UnsupportedPattern(other.to_string())),
            }
        }
        if b.nmr.is_some() {
            b.vote_interval = match mtbe {
                Some(m) => ns(m / 10.0).max(1),
                None => u64::MAX,
            };
        }
        if b.rollback.as_ref().is_some_and(|r| r.interval == 0)
            || b.rejuvenation.as_ref().is_some_and(|r| r.0 == 0)
        {
            return Err(SimError::InvalidConfig("periods must be positive".into()));
        }
        Ok(b)
    }

    fn has_recovery(&self) -> bool {
        self.rollforward.is_some()
            || self.rollback.is_some()
            || self.reinitialization.is_some()
            || (self.scoped && (self.restructure.is_some() || self.rejuvenation.is_some()))
    }
}

enum Arrivals {
    Never,
    Exponential {
        dist: Exp<f64>,
        nodes: u64,
        next: f64,
        node: u64,
    },
    Weibull {
        dist: Weibull<f64>,
        heap: BinaryHeap<Reverse<(u64, u64)>>,
    },
}

impl Arrivals {
    fn new(cfg: &SimConfig, nodes: u64, rng: &mut ChaCha8Rng) -> Self {
        let sys = &cfg.system;
        let Some(node_mtbf) = sys.node_mtbf() else {
            return Arrivals::Never;
        };
        match sys.interarrival_model {
            InterarrivalModel::Exponential => {
                // superposition of identical per-node processes
                let rate = nodes as f64 / (node_mtbf * 1e9);
                let dist = Exp::new(rate).expect("positive rate");
                let mut a = Arrivals::Exponential {
                    dist,
                    nodes,
                    next: 0.0,
                    node: 0,
                };
                a.advance(rng);
                a
            }
            InterarrivalModel::Weibull { shape } => {
                let scale = node_mtbf * 1e9 / statrs::function::gamma::gamma(1.0 + 1.0 / shape);
                let dist = Weibull::new(scale, shape).expect("valid weibull");
                let heap = (0..nodes)
                    .map(|n| Reverse((to_ns(dist.sample(rng)), n)))
                    .collect();
                Arrivals::Weibull { dist, heap }
            }
        }
    }

    fn peek(&self) -> u64 {
        match self {
            Arrivals::Never => u64::MAX,
            Arrivals::Exponential { next, .. } => to_ns(*next),
            Arrivals::Weibull { heap, .. } => heap.peek().map_or(u64::MAX, |r| r.0 .0),
        }
    }

    /// Consumes the pending arrival and returns its node.
    fn pop(&mut self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Arrivals::Never => unreachable!("no arrivals scheduled"),
            Arrivals::Exponential { node, .. } => {
                let n = *node;
                self.advance(rng);
                n
            }
            Arrivals::Weibull { dist, heap } => {
                let Reverse((t, n)) = heap.pop().expect("non-empty heap");
                heap.push(Reverse((t.saturating_add(to_ns(dist.sample(rng))), n)));
                n
            }
        }
    }

    fn advance(&mut self, rng: &mut ChaCha8Rng) {
        if let Arrivals::Exponential { dist, nodes, next, node } = self {
            *next += dist.sample(rng);
            *node = rng.random_range(0..*nodes);
        }
    }
}

fn to_ns(v: f64) -> u64 {
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.max(0.0) as u64
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PhaseKind {
    Checkpoint,
    Other,
}

struct Phase {
    kind: PhaseKind,
    category: usize,
    remaining: u64,
}

struct Trial<'a> {
    b: &'a Behavior,
    p_activation: f64,
    p_error_to_failure: f64,
    state_fraction: f64,
    t: u64,
    progress: u64,
    committed: u64,
    capacity: f64,
    overhead: [u64; 6],
    phases: VecDeque<Phase>,
    replica_errors: Vec<bool>,
    nodes_per_replica: u64,
    corrupted: bool,
    events: EventCounts,
    trace: Option<Vec<TraceEvent>>,
    decisions: ChaCha8Rng,
}

fn stream(seed: u64, trial: u64, which: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(STREAMS_PER_TRIAL).wrapping_add(which));
    rng
}

fn next_boundary(progress: u64, period: u64) -> u64 {
    (progress / period).saturating_add(1).saturating_mul(period)
}

impl Trial<'_> {
    fn log(&mut self, kind: EventKind, node: Option<u64>, detail: impl Into<String>) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent {
                time: secs(self.t),
                kind,
                node,
                detail: detail.into(),
            });
        }
    }

    fn fractions(&self) -> [f64; 6] {
        let mut f = self.b.fractions;
        if self.capacity < 1.0 {
            let total: f64 = 1.0 + f.iter().sum::<f64>();
            f[RECOVERY] += total * (1.0 / self.capacity - 1.0);
        }
        f
    }

    fn wall_time(u: u64, f: &[f64; 6]) -> u64 {
        f.iter()
            .fold(u, |acc, fi| acc.saturating_add((u as f64 * fi).round() as u64))
    }

    /// Splits `elapsed` wall time of a work chunk into useful progress (at
    /// most `cap`) and per-category overhead, summing exactly to `elapsed`.
    fn split(elapsed: u64, cap: u64, f: &[f64; 6]) -> (u64, [u64; 6]) {
        let extra: f64 = f.iter().sum();
        let mut parts = [0u64; 6];
        if extra <= 0.0 {
            return (elapsed.min(cap), parts);
        }
        let useful = ((elapsed as f64 / (1.0 + extra)).floor() as u64).min(cap).min(elapsed);
        let rest = elapsed - useful;
        let last = f.iter().rposition(|&x| x > 0.0).expect("positive fraction");
        let mut assigned = 0;
        for (i, fi) in f.iter().enumerate().take(last) {
            let share = ((rest as f64) * fi / extra).floor() as u64;
            let share = share.min(rest - assigned);
            parts[i] = share;
            assigned += share;
        }
        parts[last] = rest - assigned;
        (useful, parts)
    }

    fn lose(&mut self, amount: u64) {
        self.progress -= amount;
        self.overhead[LOST_WORK] += amount;
    }

    fn push_front(&mut self, category: usize, remaining: u64) {
        if remaining > 0 {
            self.phases.push_front(Phase {
                kind: PhaseKind::Other,
                category,
                remaining,
            });
        }
    }

    fn push_back(&mut self, kind: PhaseKind, category: usize, remaining: u64) {
        if remaining > 0 || kind == PhaseKind::Checkpoint {
            self.phases.push_back(Phase {
                kind,
                category,
                remaining,
            });
        }
    }

    fn restart_from_scratch(&mut self) {
        self.lose(self.progress);
        self.committed = 0;
        self.phases.clear();
        self.replica_errors.iter_mut().for_each(|e| *e = false);
        self.corrupted = false;
    }

    fn recover(&mut self, latency: Option<u64>) {
        let b = self.b;
        self.phases.clear();
        self.events.recovered += 1;
        if let Some(l) = latency {
            self.push_back(PhaseKind::Other, MONITORING, l);
        }
        if let Some(replay) = b.rollforward {
            self.log(EventKind::Recover, None, "rollforward");
            self.push_back(PhaseKind::Other, RECOVERY, replay);
        } else if let (true, Some((cost, degraded))) = (b.scoped, b.restructure) {
            self.log(EventKind::Recover, None, "restructure");
            self.capacity *= 1.0 - degraded;
            self.push_back(PhaseKind::Other, RECOVERY, cost);
        } else if let (true, Some((_, cost))) = (b.scoped, b.rejuvenation) {
            self.log(EventKind::Recover, None, "rejuvenation");
            self.push_back(PhaseKind::Other, REJUVENATION, cost);
        } else if let Some(rb) = &b.rollback {
            self.log(EventKind::Recover, None, "rollback");
            self.lose(self.progress - self.committed);
            self.replica_errors.iter_mut().for_each(|e| *e = false);
            self.push_back(PhaseKind::Other, RECOVERY, rb.restart);
        } else if let Some(cost) = b.reinitialization {
            self.log(EventKind::Recover, None, "reinitialization");
            self.lose(self.progress);
            self.committed = 0;
            self.replica_errors.iter_mut().for_each(|e| *e = false);
            self.push_back(PhaseKind::Other, RECOVERY, cost);
        } else {
            unreachable!("recover called without a recovery handler");
        }
    }

    fn fail(&mut self, node: Option<u64>, why: &str) {
        self.log(EventKind::Failure, node, why.to_string());
        if self.b.has_recovery() {
            self.recover(None);
        } else {
            self.events.unrecovered_failures += 1;
            self.log(EventKind::Failure, node, "unrecovered; restarting from scratch");
            self.restart_from_scratch();
        }
    }

    fn fault(&mut self, node: u64) {
        let b = self.b;
        self.events.injected_faults += 1;
        self.log(EventKind::Fault, Some(node), "fault arrival");
        if let Some(p) = &b.prediction {
            if self.decisions.random_bool(p.accuracy) {
                self.events.avoided += 1;
                self.log(EventKind::Detect, Some(node), "predicted and avoided");
                self.push_front(MONITORING, p.action);
                return;
            }
        }
        if !self.decisions.random_bool(self.p_activation) {
            return;
        }
        self.events.activated_errors += 1;
        self.log(EventKind::Error, Some(node), "fault activated");

        if let Some(corrects) = b.fec_corrects {
            if self.decisions.random_bool(self.state_fraction) {
                if corrects {
                    self.events.masked += 1;
                    self.log(EventKind::Detect, Some(node), "corrected by code");
                    return;
                }
                if b.has_recovery() {
                    self.events.detected += 1;
                    self.log(EventKind::Detect, Some(node), "uncorrectable codeword");
                    self.recover(None);
                    return;
                }
            }
        }
        if b.nmr.is_some() {
            let replica = (node / self.nodes_per_replica) as usize;
            self.replica_errors[replica] = true;
            return;
        }
        if let Some(cost) = b.recovery_block {
            self.events.masked += 1;
            self.log(EventKind::Detect, Some(node), "acceptance test switched alternate");
            self.push_front(RECOVERY, cost);
            return;
        }
        if let (Some(latency), true) = (b.monitoring, b.has_recovery()) {
            self.events.detected += 1;
            self.log(EventKind::Detect, Some(node), "monitor detected error");
            self.recover(Some(latency));
            return;
        }
        if self.decisions.random_bool(self.p_error_to_failure) {
            self.fail(Some(node), "error reached the service interface");
        }
    }

    /// Majority vote over replicas; returns false when a lost vote started recovery.
    fn vote(&mut self) -> bool {
        let n = self.b.nmr.expect("voting requires replicas");
        self.events.votes += 1;
        let bad = self.replica_errors.iter().filter(|e| **e).count() as u64;
        self.replica_errors.iter_mut().for_each(|e| *e = false);
        if bad <= (n - 1) / 2 {
            self.events.masked += bad;
            self.log(EventKind::Vote, None, format!("{bad} of {n} replicas outvoted"));
            return true;
        }
        self.events.lost_votes += 1;
        self.log(EventKind::Vote, None, format!("vote lost with {bad} of {n} replicas erroneous"));
        if self.b.has_recovery() {
            self.events.detected += 1;
            self.recover(None);
            false
        } else {
            self.corrupted = true;
            true
        }
    }
}

pub(crate) fn run_trial(
    cfg: &SimConfig,
    b: &Behavior,
    trial: u64,
    record: bool,
) -> (TrialSummary, Option<EventTrace>) {
    let sys = &cfg.system;
    let replicas = b.nmr.unwrap_or(1);
    let total_nodes = sys.node_count.saturating_mul(replicas);
    let mut arrival_rng = stream(cfg.seed, trial, STREAM_ARRIVALS);
    let mut alarm_rng = stream(cfg.seed, trial, STREAM_FALSE_ALARMS);
    let mut arrivals = Arrivals::new(cfg, total_nodes, &mut arrival_rng);
    let alarm_dist = b
        .prediction
        .as_ref()
        .filter(|p| p.alarm_rate > 0.0)
        .map(|p| Exp::new(p.alarm_rate / 1e9).expect("positive rate"));
    let mut next_alarm = alarm_dist.as_ref().map_or(f64::INFINITY, |d| d.sample(&mut alarm_rng));

    let mut s = Trial {
        b,
        p_activation: sys.p_activation,
        p_error_to_failure: sys.p_error_to_failure,
        state_fraction: sys.checkpoint_state_fraction,
        t: 0,
        progress: 0,
        committed: 0,
        capacity: 1.0,
        overhead: [0; 6],
        phases: VecDeque::new(),
        replica_errors: vec![false; replicas as usize],
        nodes_per_replica: sys.node_count,
        corrupted: false,
        events: EventCounts::default(),
        trace: record.then(Vec::new),
        decisions: stream(cfg.seed, trial, STREAM_DECISIONS),
    };

    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > cfg.event_budget {
            s.events.livelock_aborts += 1;
            s.log(EventKind::Failure, None, "event budget exhausted; trial abandoned");
            break;
        }
        let fault_at = arrivals.peek();
        let alarm_at = to_ns(next_alarm);
        let arrival_at = fault_at.min(alarm_at);

        let mut handle_arrival = |s: &mut Trial, arrivals: &mut Arrivals, next_alarm: &mut f64| {
            if alarm_at < fault_at {
                s.events.false_alarms += 1;
                s.log(EventKind::Detect, None, "false alarm");
                let action = s.b.prediction.as_ref().expect("alarms need prediction").action;
                s.push_front(MONITORING, action);
                *next_alarm += alarm_dist.as_ref().expect("alarm process").sample(&mut alarm_rng);
            } else {
                let node = arrivals.pop(&mut arrival_rng);
                s.fault(node);
            }
        };

        if let Some(phase) = s.phases.front_mut() {
            let end = s.t.saturating_add(phase.remaining);
            if arrival_at < end {
                let e = arrival_at - s.t;
                phase.remaining -= e;
                s.overhead[phase.category] += e;
                s.t = arrival_at;
                handle_arrival(&mut s, &mut arrivals, &mut next_alarm);
            } else {
                let phase = s.phases.pop_front().expect("front exists");
                s.overhead[phase.category] += phase.remaining;
                s.t = end;
                if phase.kind == PhaseKind::Checkpoint {
                    s.committed = s.progress;
                    s.log(EventKind::Checkpoint, None, format!("committed {:.3} s", secs(s.progress)));
                }
            }
            continue;
        }

        if s.progress >= b.work {
            if b.nmr.is_some() && !s.vote() {
                continue;
            }
            if s.corrupted {
                s.fail(None, "replicated result corrupted");
                continue;
            }
            s.log(EventKind::Complete, None, "workload complete");
            break;
        }

        let mut target = b.work;
        let ckpt = b.rollback.as_ref().map(|r| next_boundary(s.progress, r.interval));
        let vote = (b.nmr.is_some() && b.rollback.is_none())
            .then(|| next_boundary(s.progress, b.vote_interval));
        let rejuv = b.rejuvenation.map(|(period, _)| next_boundary(s.progress, period));
        for m in [ckpt, vote, rejuv].into_iter().flatten() {
            target = target.min(m);
        }
        let f = s.fractions();
        let chunk = target - s.progress;
        let wall = Trial::wall_time(chunk, &f);
        if arrival_at < s.t.saturating_add(wall) {
            let e = arrival_at - s.t;
            let (useful, parts) = Trial::split(e, chunk, &f);
            s.progress += useful;
            for (acc, p) in s.overhead.iter_mut().zip(parts) {
                *acc += p;
            }
            s.t = arrival_at;
            handle_arrival(&mut s, &mut arrivals, &mut next_alarm);
            continue;
        }
        let extra = wall - chunk;
        let (_, parts) = Trial::split_overhead(extra, &f);
        for (acc, p) in s.overhead.iter_mut().zip(parts) {
            *acc += p;
        }
        s.progress = target;
        s.t += wall;
        if target >= b.work {
            continue;
        }
        if let (Some(m), Some((_, cost))) = (rejuv, b.rejuvenation) {
            if m == target {
                s.log(EventKind::Rejuvenate, None, "periodic rejuvenation");
                s.push_back(PhaseKind::Other, REJUVENATION, cost);
            }
        }
        if vote == Some(target) {
            s.vote();
        }
        if let (Some(m), Some(rb)) = (ckpt, &b.rollback) {
            if m == target && (b.nmr.is_none() || s.vote()) {
                s.push_back(PhaseKind::Checkpoint, CHECKPOINTING, rb.checkpoint);
            }
        }
    }

    let summary = TrialSummary {
        trial,
        makespan_ns: s.t,
        useful_ns: s.progress,
        overhead_ns: s.overhead,
        events: s.events,
    };
    debug_assert_eq!(summary.makespan_ns, summary.useful_ns + summary.overhead_total_ns());
    (summary, s.trace.map(|events| EventTrace { events }))
}

impl Trial<'_> {
    /// Distributes pure overhead time over categories by fraction.
    fn split_overhead(extra: u64, f: &[f64; 6]) -> (u64, [u64; 6]) {
        let mut parts = [0u64; 6];
        let total: f64 = f.iter().sum();
        if extra == 0 || total <= 0.0 {
            return (0, parts);
        }
        let last = f.iter().rposition(|&x| x > 0.0).expect("positive fraction");
        let mut assigned = 0;
        for (i, fi) in f.iter().enumerate().take(last) {
            let share = (((extra as f64) * fi / total).floor() as u64).min(extra - assigned);
            parts[i] = share;
            assigned += share;
        }
        parts[last] = extra - assigned;
        (0, parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_exact() {
        let f = [0.02, 0.0, 0.03, 0.05, 0.0, 0.0];
        for e in [0u64, 1, 7, 999, 123_456_789] {
            let (u, parts) = Trial::split(e, u64::MAX, &f);
            assert_eq!(u + parts.iter().sum::<u64>(), e);
        }
        let (u, parts) = Trial::split(10, 4, &[0.0; 6]);
        assert_eq!((u, parts.iter().sum::<u64>()), (4, 0));
    }

    #[test]
    fn boundaries_are_strictly_ahead() {
        assert_eq!(next_boundary(0, 100), 100);
        assert_eq!(next_boundary(100, 100), 200);
        assert_eq!(next_boundary(150, 100), 200);
    }

    #[test]
    fn streams_differ_per_trial() {
        let a: u64 = stream(1, 0, 0).random();
        let b: u64 = stream(1, 1, 0).random();
        let c: u64 = stream(1, 0, 1).random();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, stream(1, 0, 0).random::<u64>());
    }
}
