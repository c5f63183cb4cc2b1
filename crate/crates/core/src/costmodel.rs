//! Overhead accounting along five design axes, per pattern instance and per
//! candidate solution, plus weighted scalar scoring.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, MAX_COMPLEXITY};
use crate::synthesis::PatternInstance;
use crate::system::SystemModel;

/// Saturation cap for summed design complexity.
pub const COMPLEXITY_CAP: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostVector {
    /// Ordinal effort, 1..=5 per pattern, summed across a solution.
    pub design_complexity: f64,
    /// Added runtime over base runtime when no event occurs.
    pub time_overhead_fault_free: f64,
    /// Seconds spent handling one event.
    pub time_overhead_per_event: f64,
    /// Extra resources over base resources.
    pub space_overhead: f64,
    pub power_overhead: f64,
}

impl CostVector {
    pub const ZERO: CostVector = CostVector {
        design_complexity: 0.0,
        time_overhead_fault_free: 0.0,
        time_overhead_per_event: 0.0,
        space_overhead: 0.0,
        power_overhead: 0.0,
    };

    pub fn components(&self) -> [f64; 5] {
        [
            self.design_complexity,
            self.time_overhead_fault_free,
            self.time_overhead_per_event,
            self.space_overhead,
            self.power_overhead,
        ]
    }

    pub fn from_components(c: [f64; 5]) -> Self {
        Self {
            design_complexity: c[0],
            time_overhead_fault_free: c[1],
            time_overhead_per_event: c[2],
            space_overhead: c[3],
            power_overhead: c[4],
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.components().iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(())
        } else {
            Err(format!("cost components must be finite and non-negative: {self:?}"))
        }
    }

    fn plus(&self, other: &CostVector) -> CostVector {
        let (a, b) = (self.components(), other.components());
        CostVector::from_components(std::array::from_fn(|i| a[i] + b[i]))
    }
}

pub const WEIGHT_NAMES: [&str; 5] = [
    "design_complexity",
    "time_overhead_fault_free",
    "time_overhead_per_event",
    "space_overhead",
    "power_overhead",
];

/// Non-negative weights over the five cost axes, normalized to sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostVector", into = "CostVector")]
pub struct CostWeights([f64; 5]);

impl CostWeights {
    pub fn new(raw: [f64; 5]) -> Result<Self, CostError> {
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CostError::Weights("weights must be finite and non-negative".into()));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(CostError::Weights("at least one weight must be positive".into()));
        }
        Ok(Self(raw.map(|w| w / total)))
    }

    pub fn uniform() -> Self {
        Self([0.2; 5])
    }

    pub fn values(&self) -> [f64; 5] {
        self.0
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl TryFrom<CostVector> for CostWeights {
    type Error = CostError;

    fn try_from(v: CostVector) -> Result<Self, Self::Error> {
        CostWeights::new(v.components())
    }
}

impl From<CostWeights> for CostVector {
    fn from(w: CostWeights) -> Self {
        CostVector::from_components(w.0)
    }
}

impl FromStr for CostWeights {
    type Err = CostError;

    /// Five comma-separated non-negative numbers, in `WEIGHT_NAMES` order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(CostError::Weights(format!(
                "expected 5 comma-separated weights, got {}",
                parts.len()
            )));
        }
        let mut raw = [0.0; 5];
        for (slot, part) in raw.iter_mut().zip(&parts) {
            *slot = part
                .parse::<f64>()
                .map_err(|_| CostError::Weights(format!("`{part}` is not a number")))?;
        }
        CostWeights::new(raw)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("pattern `{pattern}` has no parameter `{parameter}`")]
    UnknownParameter { pattern: String, parameter: String },
    #[error("parameter `{parameter}` of `{pattern}` = {value} is outside its domain")]
    OutOfDomain {
        pattern: String,
        parameter: String,
        value: f64,
    },
    #[error("invalid weights: {0}")]
    Weights(String),
}

/// Resolves an instance's bindings against its parameter specs, filling defaults.
pub fn resolve_bindings(
    instance: &PatternInstance,
    catalog: &Catalog,
) -> Result<BTreeMap<String, f64>, CostError> {
    let pattern = catalog
        .get(&instance.pattern)
        .ok_or_else(|| CostError::UnknownPattern(instance.pattern.clone()))?;
    for name in instance.bindings.keys() {
        if pattern.parameter(name).is_none() {
            return Err(CostError::UnknownParameter {
                pattern: pattern.id.clone(),
                parameter: name.clone(),
            });
        }
    }
    let mut out = BTreeMap::new();
    for spec in &pattern.parameters {
        let value = instance.bindings.get(&spec.name).copied().unwrap_or(spec.default);
        if !spec.domain.contains(value) {
            return Err(CostError::OutOfDomain {
                pattern: pattern.id.clone(),
                parameter: spec.name.clone(),
                value,
            });
        }
        out.insert(spec.name.clone(), value);
    }
    Ok(out)
}

/// Cost of one instantiated pattern on `sys`.
///
/// Fault-free time and per-event time follow the pattern's own mechanism
/// (for rollback `δ/τ` and `R + τ/2`). Power tracks space unless the catalog
/// sets an explicit power overhead in the pattern's base cost.
pub fn instance_cost(
    instance: &PatternInstance,
    catalog: &Catalog,
    sys: &SystemModel,
) -> Result<CostVector, CostError> {
    let b = resolve_bindings(instance, catalog)?;
    let pattern = catalog.get(&instance.pattern).expect("resolved above");
    let v = |name: &str| b[name];
    let state = sys.checkpoint_state_fraction;

    // (fault-free fraction, per-event seconds, space fraction)
    let (fault_free, per_event, space) = match pattern.id.as_str() {
        "rollback" => {
            let tau = v("interval");
            (v("checkpoint_cost") / tau, v("restart_cost") + tau / 2.0, state)
        }
        "rollforward" => (v("log_cost"), v("replay_cost"), state),
        "n-modular-redundancy" => (0.0, 0.0, v("N") - 1.0),
        "forward-error-correction-code" => (v("codec_cost"), 0.0, v("r") / v("k")),
        "monitoring" => (v("overhead"), v("detection_latency"), 0.0),
        "prediction" => (
            0.0,
            v("action_cost") * (v("accuracy") + v("false_positive_rate")),
            0.0,
        ),
        "rejuvenation" => (v("cost") / v("period"), v("cost"), 0.0),
        "reinitialization" => (0.0, v("cost"), 0.0),
        "restructure" => (0.0, v("cost"), 0.0),
        "n-version-design" => (v("cost_multiplier") - 1.0, 0.0, v("versions") - 1.0),
        "recovery-block" => (v("acceptance_test_cost"), 0.0, 0.0),
        _ => (0.0, 0.0, 0.0),
    };

    let base = pattern.base_cost;
    let mut cost = CostVector {
        design_complexity: f64::from(pattern.complexity.min(MAX_COMPLEXITY)),
        time_overhead_fault_free: fault_free,
        time_overhead_per_event: per_event,
        space_overhead: space,
        power_overhead: 0.0,
    }
    .plus(&base);
    if base.power_overhead == 0.0 {
        cost.power_overhead = cost.space_overhead;
    }
    Ok(cost)
}

/// Combines per-instance costs: fault-free time and power compose
/// multiplicatively, space and per-event time add, complexity adds up to
/// [`COMPLEXITY_CAP`].
pub fn aggregate<'a>(costs: impl IntoIterator<Item = &'a CostVector>) -> CostVector {
    let mut complexity = 0.0;
    // overheads kept in excess form so a single instance round-trips exactly
    let mut time = 0.0;
    let mut power = 0.0;
    let mut per_event = 0.0;
    let mut space = 0.0;
    for c in costs {
        complexity += c.design_complexity;
        time += c.time_overhead_fault_free + time * c.time_overhead_fault_free;
        power += c.power_overhead + power * c.power_overhead;
        per_event += c.time_overhead_per_event;
        space += c.space_overhead;
    }
    CostVector {
        design_complexity: complexity.min(COMPLEXITY_CAP),
        time_overhead_fault_free: time,
        time_overhead_per_event: per_event,
        space_overhead: space,
        power_overhead: power,
    }
}

/// Aggregate cost of a set of instances on `sys`.
pub fn aggregate_cost(
    instances: &[PatternInstance],
    catalog: &Catalog,
    sys: &SystemModel,
) -> Result<CostVector, CostError> {
    let costs = instances
        .iter()
        .map(|i| instance_cost(i, catalog, sys))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(&costs))
}

/// Weighted scalar score, lower is better. Complexity is divided by the cap,
/// per-event seconds by the system MTBE (zero contribution when faults never
/// occur), fractions are used as-is.
pub fn score(v: &CostVector, w: &CostWeights, sys: &SystemModel) -> f64 {
    let per_event = match sys.mean_time_between_events() {
        Some(m) => v.time_overhead_per_event / m,
        None => 0.0,
    };
    let normalized = [
        v.design_complexity / COMPLEXITY_CAP,
        v.time_overhead_fault_free,
        per_event,
        v.space_overhead,
        v.power_overhead,
    ];
    normalized
        .iter()
        .zip(w.values())
        .map(|(x, w)| x * w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use proptest::prelude::*;

    fn inst(pattern: &str, bindings: &[(&str, f64)]) -> PatternInstance {
        PatternInstance {
            pattern: pattern.to_string(),
            bindings: bindings.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn rollback_formulas() {
        let c = builtin_catalog();
        let sys = SystemModel::reference();
        let i = inst(
            "rollback",
            &[("interval", 100.0), ("checkpoint_cost", 10.0), ("restart_cost", 30.0)],
        );
        let v = instance_cost(&i, &c, &sys).unwrap();
        assert!(close(v.time_overhead_fault_free, 0.10));
        assert!(close(v.time_overhead_per_event, 80.0));
        assert!(close(v.space_overhead, sys.checkpoint_state_fraction));

        let far = inst("rollback", &[("interval", 1.0e9), ("checkpoint_cost", 10.0)]);
        let v = instance_cost(&far, &c, &sys).unwrap();
        assert!(v.time_overhead_fault_free < 1e-7);
    }

    #[test]
    fn replication_space() {
        let c = builtin_catalog();
        let sys = SystemModel::reference();
        let nmr = instance_cost(&inst("n-modular-redundancy", &[("N", 3.0)]), &c, &sys).unwrap();
        assert_eq!(nmr.space_overhead, 2.0);
        assert_eq!(nmr.power_overhead, 2.0);
        let fec = instance_cost(
            &inst("forward-error-correction-code", &[("k", 8.0), ("r", 2.0), ("codec_cost", 0.03)]),
            &c,
            &sys,
        )
        .unwrap();
        assert_eq!(fec.space_overhead, 0.25);
        assert_eq!(fec.time_overhead_fault_free, 0.03);
    }

    #[test]
    fn bad_bindings_are_errors() {
        let c = builtin_catalog();
        let sys = SystemModel::reference();
        assert!(matches!(
            instance_cost(&inst("n-modular-redundancy", &[("N", 4.0)]), &c, &sys),
            Err(CostError::OutOfDomain { .. })
        ));
        assert!(matches!(
            instance_cost(&inst("rollback", &[("tau", 4.0)]), &c, &sys),
            Err(CostError::UnknownParameter { .. })
        ));
        assert!(matches!(
            instance_cost(&inst("warp-drive", &[]), &c, &sys),
            Err(CostError::UnknownPattern(_))
        ));
    }

    #[test]
    fn aggregation_identity_and_product() {
        let a = CostVector {
            design_complexity: 2.0,
            time_overhead_fault_free: 0.10,
            time_overhead_per_event: 5.0,
            space_overhead: 0.5,
            power_overhead: 0.5,
        };
        assert_eq!(aggregate([&a]), a);
        let agg = aggregate([&a, &a]);
        assert!(close(agg.time_overhead_fault_free, 0.21));
        assert!(close(agg.power_overhead, 1.25));
        assert_eq!(agg.space_overhead, 1.0);
        assert_eq!(agg.time_overhead_per_event, 10.0);
        assert_eq!(agg.design_complexity, 4.0);

        let heavy = CostVector { design_complexity: 5.0, ..CostVector::ZERO };
        let many = vec![heavy; 7];
        assert_eq!(aggregate(&many).design_complexity, COMPLEXITY_CAP);
    }

    #[test]
    fn score_basics() {
        let sys = SystemModel::reference();
        assert_eq!(score(&CostVector::ZERO, &CostWeights::uniform(), &sys), 0.0);

        let c = builtin_catalog();
        let space_only = CostWeights::new([0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let nmr = instance_cost(&inst("n-modular-redundancy", &[("N", 3.0)]), &c, &sys).unwrap();
        let rb = instance_cost(
            &inst("rollback", &[("interval", 100.0), ("checkpoint_cost", 10.0)]),
            &c,
            &sys,
        )
        .unwrap();
        assert!(score(&nmr, &space_only, &sys) > score(&rb, &space_only, &sys));
    }

    #[test]
    fn weights_parse_and_normalize() {
        let w: CostWeights = "1,1,0,2,0".parse().unwrap();
        assert_eq!(w.values(), [0.25, 0.25, 0.0, 0.5, 0.0]);
        assert!("1,2,3".parse::<CostWeights>().is_err());
        assert!("0,0,0,0,0".parse::<CostWeights>().is_err());
        assert!("1,-1,0,0,0".parse::<CostWeights>().is_err());
        let json = serde_json::to_string(&w).unwrap();
        let back: CostWeights = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }

    fn vector() -> impl Strategy<Value = CostVector> {
        proptest::array::uniform5(0.0f64..10.0).prop_map(CostVector::from_components)
    }

    proptest! {
        #[test]
        fn rollback_interval_tradeoff(t1 in 1.0f64..1.0e6, dt in 1.0e-3f64..1.0e6) {
            let c = builtin_catalog();
            let sys = SystemModel::reference();
            let at = |tau: f64| instance_cost(
                &inst("rollback", &[("interval", tau), ("checkpoint_cost", 10.0), ("restart_cost", 30.0)]),
                &c, &sys).unwrap();
            let (a, b) = (at(t1), at(t1 + dt));
            prop_assert!(b.time_overhead_fault_free < a.time_overhead_fault_free);
            prop_assert!(b.time_overhead_per_event > a.time_overhead_per_event);
        }

        #[test]
        fn aggregation_order_free(a in vector(), b in vector(), c in vector()) {
            let abc = aggregate([&a, &b, &c]);
            let cab = aggregate([&c, &a, &b]);
            let nested = aggregate([&aggregate([&a, &b]), &c]);
            for (x, y) in abc.components().iter().zip(cab.components()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
            // associativity holds wherever the complexity cap is not hit
            if a.design_complexity + b.design_complexity + c.design_complexity <= COMPLEXITY_CAP {
                for (x, y) in abc.components().iter().zip(nested.components()) {
                    prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
                }
            }
        }

        #[test]
        fn score_monotone(v in vector(), axis in 0usize..5, bump in 0.0f64..5.0,
                          raw in proptest::array::uniform5(0.0f64..1.0)) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let w = CostWeights::new(raw).unwrap();
            let sys = SystemModel::reference();
            let mut bigger = v.components();
            bigger[axis] += bump;
            prop_assert!(score(&CostVector::from_components(bigger), &w, &sys) >= score(&v, &w, &sys));
        }

        #[test]
        fn weight_scaling_keeps_order(a in vector(), b in vector(), k in 0.01f64..100.0,
                                      raw in proptest::array::uniform5(0.0f64..1.0)) {
            prop_assume!(raw.iter().sum::<f64>() > 0.0);
            let sys = SystemModel::reference();
            let w1 = CostWeights::new(raw).unwrap();
            let w2 = CostWeights::new(raw.map(|x| x * k)).unwrap();
            let o1 = score(&a, &w1, &sys).partial_cmp(&score(&b, &w1, &sys));
            let o2 = score(&a, &w2, &sys).partial_cmp(&score(&b, &w2, &sys));
            // normalization makes the two weight sets equal up to rounding
            let gap = (score(&a, &w1, &sys) - score(&b, &w1, &sys)).abs();
            if gap > 1e-9 { prop_assert_eq!(o1, o2); }
        }
    }
}
