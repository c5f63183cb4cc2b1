use std::collections::BTreeSet;

use super::{Capability, Catalog, FaultModelClass, ParameterDomain, ParameterSpec, Pattern, PatternClass};
use crate::costmodel::CostVector;

/// Parent links stated explicitly by the source pattern tables, `(derivative, parent)`.
pub const TABLE_PARENT_LINKS: [(&str, &str); 15] = [
    ("fault-diagnosis", "fault-treatment"),
    ("reconfiguration", "fault-treatment"),
    ("reconfiguration", "recovery"),
    ("checkpoint-recovery", "recovery"),
    ("redundancy", "compensation"),
    ("design-diversity", "compensation"),
    ("monitoring", "fault-diagnosis"),
    ("restructure", "reconfiguration"),
    ("rejuvenation", "reconfiguration"),
    ("reinitialization", "reconfiguration"),
    ("rollback", "checkpoint-recovery"),
    ("forward-error-correction-code", "redundancy"),
    ("n-modular-redundancy", "redundancy"),
    ("n-version-design", "design-diversity"),
    ("recovery-block", "design-diversity"),
];

/// Parent links the tables leave open; filled in by this catalog and flagged
/// as inferred wherever edges are reported.
pub const INFERRED_PARENT_LINKS: [(&str, &str); 2] = [
    ("prediction", "fault-diagnosis"),
    ("rollforward", "checkpoint-recovery"),
];

pub const BUILTIN_VERSION: &str = "1.0.0";

use Capability::*;
use FaultModelClass::*;

const ALL_EVENTS: &[FaultModelClass] = &[Fault, Error, Failure];
const ERRORS_FAILURES: &[FaultModelClass] = &[Error, Failure];

struct Row {
    id: &'static str,
    name: &'static str,
    class: PatternClass,
    parents: &'static [&'static str],
    handles: &'static [FaultModelClass],
    capabilities: &'static [Capability],
    complexity: u8,
    problem: &'static str,
    solution: &'static str,
    forces: &'static str,
    consequences: &'static str,
}

fn interval(min: f64, max: f64) -> ParameterDomain {
    ParameterDomain::Interval { min, max }
}

fn integers(min: i64, max: Option<i64>, step: i64) -> ParameterDomain {
    ParameterDomain::Integers { min, max, step }
}

const SECONDS_MAX: f64 = 1.0e9;

fn parameters_for(id: &str) -> Vec<ParameterSpec> {
    let p = ParameterSpec::new;
    match id {
        "rollback" => vec![
            p("interval", "seconds", interval(1.0, SECONDS_MAX), 3600.0),
            p("checkpoint_cost", "seconds", interval(0.0, 1.0e6), 60.0),
            p("restart_cost", "seconds", interval(0.0, 1.0e6), 120.0),
        ],
        "rollforward" => vec![
            p("log_cost", "fraction", interval(0.0, 1.0), 0.02),
            p("replay_cost", "seconds", interval(0.0, 1.0e6), 60.0),
        ],
        "n-modular-redundancy" => vec![p("N", "count", integers(3, None, 2), 3.0)],
        "forward-error-correction-code" => vec![
            p("k", "count", integers(1, Some(1024), 1), 8.0),
            p("r", "count", integers(1, Some(1024), 1), 2.0),
            p("codec_cost", "fraction", interval(0.0, 1.0), 0.03),
        ],
        "monitoring" => vec![
            p("overhead", "fraction", interval(0.0, 1.0), 0.02),
            p("detection_latency", "seconds", interval(0.0, 1.0e6), 5.0),
        ],
        "prediction" => vec![
            p("accuracy", "fraction", interval(0.0, 1.0), 0.7),
            p("false_positive_rate", "fraction", interval(0.0, 1.0), 0.1),
            p("action_cost", "seconds", interval(0.0, 1.0e6), 30.0),
        ],
        "rejuvenation" => vec![
            p("period", "seconds", interval(1.0, SECONDS_MAX), 86400.0),
            p("cost", "seconds", interval(0.0, 1.0e6), 120.0),
        ],
        "reinitialization" => vec![p("cost", "seconds", interval(0.0, 1.0e6), 300.0)],
        "restructure" => vec![
            p("cost", "seconds", interval(0.0, 1.0e6), 60.0),
            p("degraded_capacity", "fraction", interval(0.0, 0.99), 0.01),
        ],
        "n-version-design" => vec![
            p("versions", "count", integers(2, Some(16), 1), 3.0),
            p("cost_multiplier", "factor", interval(1.0, 100.0), 1.05),
        ],
        "recovery-block" => vec![
            p("acceptance_test_cost", "fraction", interval(0.0, 1.0), 0.05),
            p("alternates", "count", integers(1, Some(16), 1), 1.0),
        ],
        _ => Vec::new(),
    }
}

fn base_cost_for(id: &str) -> CostVector {
    match id {
        // rule evaluation runs continuously alongside the application
        "prediction" => CostVector {
            time_overhead_fault_free: 0.01,
            ..CostVector::ZERO
        },
        // re-running an alternate block after a failed acceptance test
        "recovery-block" => CostVector {
            time_overhead_per_event: 10.0,
            ..CostVector::ZERO
        },
        _ => CostVector::ZERO,
    }
}

const ROWS: &[Row] = &[
    // strategy
    Row {
        id: "fault-treatment",
        name: "Fault Treatment",
        class: PatternClass::Strategy,
        parents: &[],
        handles: &[Fault],
        capabilities: &[Detection, Recovery],
        complexity: 3,
        problem: "Latent defects may activate and lead to errors or to partial or complete failure.",
        solution: "Identify defects before they activate and act to keep them dormant, using an observer of key system parameters.",
        forces: "The observer can perturb the observed system; a defect may activate before it is identified.",
        consequences: "Avoids costly recovery or compensation when defects are caught early, at the price of a permanent observer.",
    },
    Row {
        id: "recovery",
        name: "Recovery",
        class: PatternClass::Strategy,
        parents: &[],
        handles: ERRORS_FAILURES,
        capabilities: &[Recovery],
        complexity: 3,
        problem: "Errors and failures stop applications from completing correctly.",
        solution: "Preserve compartmentalized system state so that a pre-event state can be reinstated later.",
        forces: "Preserving state costs time even when nothing goes wrong.",
        consequences: "Erroneous state is replaced by a saved good state; cost grows with state size and snapshot frequency.",
    },
    Row {
        id: "compensation",
        name: "Compensation",
        class: PatternClass::Strategy,
        parents: &[],
        handles: ERRORS_FAILURES,
        capabilities: &[Masking, Detection],
        complexity: 3,
        problem: "Errors and failures make applications produce wrong results or stop.",
        solution: "Keep redundant information about well-defined modules so a faulty module can be substituted.",
        forces: "Redundancy costs time or resources whether or not an event occurs.",
        consequences: "Events in one module are tolerated by switching to an equivalent replica module.",
    },
    // architectural
    Row {
        id: "fault-diagnosis",
        name: "Fault Diagnosis",
        class: PatternClass::Architectural,
        parents: &["fault-treatment"],
        handles: &[Fault],
        capabilities: &[Detection],
        complexity: 3,
        problem: "Remedial design is hard without knowing where a defect is and what it affects.",
        solution: "Analyze the behavior of the monitored system to locate defects.",
        forces: "A defect can activate while diagnosis is still running; diagnosis must be accurate.",
        consequences: "Defects are identified and reported but not repaired.",
    },
    Row {
        id: "reconfiguration",
        name: "Reconfiguration",
        class: PatternClass::Architectural,
        parents: &["fault-treatment", "recovery"],
        handles: ALL_EVENTS,
        capabilities: &[Recovery],
        complexity: 3,
        problem: "An event disturbs the configuration of system components and prevents correct operation.",
        solution: "Change how modules are interconnected, either to keep a defect dormant or to recover from an event.",
        forces: "The system must decompose into modules such that a subset can stand in for the whole.",
        consequences: "Relies on encapsulating system functions into well-defined modules.",
    },
    Row {
        id: "checkpoint-recovery",
        name: "Checkpoint-Recovery",
        class: PatternClass::Architectural,
        parents: &["recovery"],
        handles: ERRORS_FAILURES,
        capabilities: &[Recovery],
        complexity: 3,
        problem: "Unrecoverable errors and failures halt application execution.",
        solution: "Keep system state, or a log of nondeterministic events, on stable storage during normal operation.",
        forces: "Needs stable storage and slows down event-free execution.",
        consequences: "Saved state or logs recreate the last good state before restart; cost scales with state size and frequency.",
    },
    Row {
        id: "redundancy",
        name: "Redundancy",
        class: PatternClass::Architectural,
        parents: &["compensation"],
        handles: ERRORS_FAILURES,
        capabilities: &[Masking],
        complexity: 2,
        problem: "Random physical faults cause errors and failures during execution.",
        solution: "Run several redundant copies, assuming a random event rarely strikes more than one.",
        forces: "Costs time or space regardless of whether events occur.",
        consequences: "A group of identical replicas whose independence is assumed rather than guaranteed.",
    },
    Row {
        id: "design-diversity",
        name: "Design Diversity",
        class: PatternClass::Architectural,
        parents: &["compensation"],
        handles: ERRORS_FAILURES,
        capabilities: &[Masking],
        complexity: 4,
        problem: "Human mistakes and faulty tools leave design defects that cause malfunction.",
        solution: "Use independently designed, rather than identical, implementations of the same requirements.",
        forces: "Independent implementations multiply design and verification effort.",
        consequences: "Design bugs are avoided systematically by diversity of teams and tools.",
    },
    // structural
    Row {
        id: "monitoring",
        name: "Monitoring",
        class: PatternClass::Structural,
        parents: &["fault-diagnosis"],
        handles: &[Fault],
        capabilities: &[Detection],
        complexity: 2,
        problem: "A defect or anomaly can turn into an error or failure.",
        solution: "Observe the system and infer defects by effect-cause or cause-effect analysis.",
        forces: "The observer interferes with the observed system.",
        consequences: "Extra observation components slow down normal operation.",
    },
    Row {
        id: "prediction",
        name: "Prediction",
        class: PatternClass::Structural,
        parents: &["fault-diagnosis"],
        handles: &[Fault],
        capabilities: &[Detection],
        complexity: 3,
        problem: "Conditions that precede faults can be recognized in time to avert errors and failures.",
        solution: "Forecast fault events from association rules or statistical models of system parameters.",
        forces: "Forecasts must come early and be accurate enough to keep false alarms rare.",
        consequences: "Adds evaluation overhead plus the cost of acting on wrong forecasts.",
    },
    Row {
        id: "restructure",
        name: "Restructure",
        class: PatternClass::Structural,
        parents: &["reconfiguration"],
        handles: ALL_EVENTS,
        capabilities: &[Recovery],
        complexity: 3,
        problem: "An event corrupts the configuration so the system cannot operate correctly.",
        solution: "Rewire the interconnected subsystems to isolate the affected one.",
        forces: "The system may continue in a degraded state with fewer subsystems.",
        consequences: "Only the affected subsystem is excluded; functional equivalence is hard to guarantee.",
    },
    Row {
        id: "rejuvenation",
        name: "Rejuvenation",
        class: PatternClass::Structural,
        parents: &["reconfiguration"],
        handles: ALL_EVENTS,
        capabilities: &[Recovery],
        complexity: 3,
        problem: "An event makes a subsystem misbehave and blocks correct system operation.",
        solution: "Isolate the affected part and restore or recreate just its state.",
        forces: "Finding the affected part and reinitializing it selectively is expensive.",
        consequences: "Requires precise identification of the affected subsystem and a reset of its configuration.",
    },
    Row {
        id: "reinitialization",
        name: "Reinitialization",
        class: PatternClass::Structural,
        parents: &["reconfiguration"],
        handles: ALL_EVENTS,
        capabilities: &[Recovery],
        complexity: 1,
        problem: "An event leaves the system in a state from which correct operation cannot be restored.",
        solution: "Reset all state to its pristine initial value and resume.",
        forces: "All progress is discarded; used when the damage cannot be repaired otherwise.",
        consequences: "Slow, but removes every trace of the event.",
    },
    Row {
        id: "rollback",
        name: "Rollback",
        class: PatternClass::Structural,
        parents: &["checkpoint-recovery"],
        handles: ERRORS_FAILURES,
        capabilities: &[Recovery],
        complexity: 2,
        problem: "An error or failure stops forward progress.",
        solution: "Capture state periodically (optionally with message logs) and restore the most recent capture after an event.",
        forces: "Checkpointing more often costs more time but loses less work per event.",
        consequences: "Event-free overhead scales with state size and checkpoint frequency; lost work shrinks as frequency grows.",
    },
    Row {
        id: "rollforward",
        name: "Rollforward",
        class: PatternClass::Structural,
        parents: &["checkpoint-recovery"],
        handles: ERRORS_FAILURES,
        capabilities: &[Recovery],
        complexity: 3,
        problem: "An error or failure disrupts correct operation.",
        solution: "Commit state or log nondeterministic events, then resume from the point reached just before the event.",
        forces: "The recovered state should need as little recomputation as possible.",
        consequences: "Usually cheaper per event than restoring an older checkpoint.",
    },
    Row {
        id: "forward-error-correction-code",
        name: "Forward Error Correction Code",
        class: PatternClass::Structural,
        parents: &["redundancy"],
        handles: &[Error],
        capabilities: &[Masking],
        complexity: 2,
        problem: "Corrupted information in system state breaks correct operation.",
        solution: "Store k data symbols with r check symbols and decode to detect and repair corrupted symbols.",
        forces: "Stronger codes need more check symbols and more coding time.",
        consequences: "Every access pays coding overhead; correction strength follows the number of check symbols.",
    },
    Row {
        id: "n-modular-redundancy",
        name: "N-Modular Redundancy",
        class: PatternClass::Structural,
        parents: &["redundancy"],
        handles: ERRORS_FAILURES,
        capabilities: &[Masking, Detection],
        complexity: 2,
        problem: "Errors and partial or complete failures must be tolerated.",
        solution: "Run N identical replicas (spatially, temporally or on demand) and compare their outputs by majority vote.",
        forces: "N-fold replication is costly; the replication boundary and its inputs and outputs need care.",
        consequences: "Design effort is low since replicas are identical; resources or time grow with N. A majority vote over N replicas outvotes at most (N-1)/2 bad replicas.",
    },
    Row {
        id: "n-version-design",
        name: "N-Version Design",
        class: PatternClass::Structural,
        parents: &["design-diversity"],
        handles: ERRORS_FAILURES,
        capabilities: &[Masking],
        complexity: 5,
        problem: "Design bugs surface at run time as incorrect behavior or failure.",
        solution: "Build several independent implementations of one specification with separate teams and tools.",
        forces: "Each version must come from a different team and be verified on its own.",
        consequences: "Functionally identical versions at a large design and implementation cost.",
    },
    Row {
        id: "recovery-block",
        name: "Recovery Block",
        class: PatternClass::Structural,
        parents: &["design-diversity"],
        handles: ERRORS_FAILURES,
        capabilities: &[Masking],
        complexity: 4,
        problem: "Design flaws from human error or faulty tools cause errors or failures.",
        solution: "Split the system into blocks holding a primary, alternates and an adjudicating acceptance test.",
        forces: "The acceptance test must catch design errors without the cost of a full second design.",
        consequences: "Needs a thorough acceptance test for the result of each primary block.",
    },
    // state
    Row {
        id: "persistent-state",
        name: "Persistent State",
        class: PatternClass::State,
        parents: &[],
        handles: &[],
        capabilities: &[Containment],
        complexity: 2,
        problem: "State fixed for the whole run has its own protection needs.",
        solution: "Scope the state computed at initialization and never modified afterwards.",
        forces: "Defining it precisely needs detailed knowledge of the system.",
        consequences: "Lets behavioral patterns exploit immutability for detection and mitigation.",
    },
    Row {
        id: "dynamic-state",
        name: "Dynamic State",
        class: PatternClass::State,
        parents: &[],
        handles: &[],
        capabilities: &[Containment],
        complexity: 3,
        problem: "State that changes as the system runs has its own protection needs.",
        solution: "Scope the state modified during operation as the system makes progress.",
        forces: "Scoping mutable state precisely takes careful analysis.",
        consequences: "Enables patterns that keep this state consistent during mitigation.",
    },
    Row {
        id: "environment-state",
        name: "Environment State",
        class: PatternClass::State,
        parents: &[],
        handles: &[],
        capabilities: &[Containment],
        complexity: 2,
        problem: "State behind shared supporting services has its own protection needs.",
        solution: "Scope the state that provides services to the main system function.",
        forces: "Requires modular design and clean service abstractions.",
        consequences: "Lets behavioral patterns protect the supporting services themselves.",
    },
    Row {
        id: "stateless",
        name: "Stateless",
        class: PatternClass::State,
        parents: &[],
        handles: &[],
        capabilities: &[],
        complexity: 1,
        problem: "Some strategies are applied without a specified protection domain.",
        solution: "Null state: behavior is defined without scoping any protection domain.",
        forces: "Scope and impact of the solution are hard to reason about.",
        consequences: "Behavioral patterns need not consider side effects of mitigation on state.",
    },
];

fn to_pattern(row: &Row) -> Pattern {
    Pattern {
        id: row.id.to_string(),
        name: row.name.to_string(),
        class: row.class,
        parents: row.parents.iter().map(|s| s.to_string()).collect(),
        problem: row.problem.to_string(),
        solution: row.solution.to_string(),
        forces: row.forces.to_string(),
        consequences: row.consequences.to_string(),
        handles: row.handles.iter().copied().collect::<BTreeSet<_>>(),
        capabilities: row.capabilities.iter().copied().collect::<BTreeSet<_>>(),
        parameters: parameters_for(row.id),
        base_cost: base_cost_for(row.id),
        complexity: row.complexity,
    }
}

/// The fixed 23-pattern catalog.
pub fn builtin_catalog() -> Catalog {
    Catalog::new(BUILTIN_VERSION, ROWS.iter().map(to_pattern))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::validate_catalog;

    #[test]
    fn census() {
        let c = builtin_catalog();
        assert_eq!(c.len(), 23);
        assert_eq!(c.class_histogram(), [3, 5, 11, 4]);
        assert!(validate_catalog(&c).is_empty(), "{:?}", validate_catalog(&c));
    }

    #[test]
    fn parents_match_link_tables() {
        let c = builtin_catalog();
        let mut declared: Vec<(String, String)> = c
            .iter()
            .flat_map(|p| p.parents.iter().map(move |q| (p.id.clone(), q.clone())))
            .collect();
        declared.sort();
        let mut expected: Vec<(String, String)> = TABLE_PARENT_LINKS
            .iter()
            .chain(INFERRED_PARENT_LINKS.iter())
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        expected.sort();
        assert_eq!(declared, expected);
    }

    #[test]
    fn spot_rows() {
        let c = builtin_catalog();
        let rollback = c.get("rollback").unwrap();
        assert_eq!(rollback.class, PatternClass::Structural);
        assert_eq!(rollback.parents, vec!["checkpoint-recovery".to_string()]);

        let stateless = c.get("stateless").unwrap();
        assert_eq!(stateless.class, PatternClass::State);
        assert!(stateless.handles.is_empty());

        let nmr = c.get("n-modular-redundancy").unwrap();
        let n = nmr.parameter("N").unwrap();
        assert_eq!(n.default, 3.0);
        assert!(n.domain.contains(3.0) && n.domain.contains(7.0));
        assert!(!n.domain.contains(2.0) && !n.domain.contains(4.0) && !n.domain.contains(1.0));
    }

    #[test]
    fn strategy_fault_models() {
        let c = builtin_catalog();
        let h = |id: &str| c.get(id).unwrap().handles.iter().copied().collect::<Vec<_>>();
        assert_eq!(h("fault-treatment"), vec![Fault]);
        assert_eq!(h("recovery"), vec![Error, Failure]);
        assert_eq!(h("compensation"), vec![Error, Failure]);
    }

    #[test]
    fn strategy_capabilities_are_descendant_unions() {
        let c = builtin_catalog();
        for root in c.of_class(PatternClass::Strategy) {
            let mut union = BTreeSet::new();
            for p in c.iter().filter(|p| p.class.is_behavioral() && p.id != root.id) {
                let mut frontier = p.parents.clone();
                let mut reaches = false;
                while let Some(q) = frontier.pop() {
                    if q == root.id {
                        reaches = true;
                    }
                    frontier.extend(c.get(&q).unwrap().parents.iter().cloned());
                }
                if reaches {
                    union.extend(p.capabilities.iter().copied());
                }
            }
            assert_eq!(root.capabilities, union, "{}", root.id);
        }
    }
}
